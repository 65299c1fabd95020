#include <cstdio>

int main() {
    std::puts("tonelab: command-line interface not wired up yet");
    return 0;
}
