#include "tonelab/embeddings.hpp"

#include <fstream>
#include <string>

#include "tonelab/csv.hpp"
#include "tonelab/errors.hpp"

namespace tonelab {

void EmbeddingSet::rebuild_index() {
    index.clear();
    for (std::size_t i = 0; i < token_ids.size(); ++i)
        index[token_ids[i]] = static_cast<int>(i);
}

Eigen::RowVectorXd EmbeddingSet::row_of(const std::string& token_id) const {
    const auto it = index.find(token_id);
    if (it == index.end()) throw DataError("no embedding for token \"" + token_id + "\"");
    return e.row(it->second);
}

EmbeddingSet load_embeddings(const std::string& path) {
    std::string header_line;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError(path + ": cannot open file");
        std::getline(in, header_line);
        if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    }
    std::vector<std::string> header;
    std::size_t start = 0;
    while (start <= header_line.size()) {
        const std::size_t comma = header_line.find(',', start);
        if (comma == std::string::npos) {
            header.push_back(header_line.substr(start));
            break;
        }
        header.push_back(header_line.substr(start, comma - start));
        start = comma + 1;
    }
    if (header.size() < 2 || header[0] != "token_id")
        throw ParseError(path + ":1: expected header token_id,e0,...");
    const int d = static_cast<int>(header.size()) - 1;
    for (int i = 0; i < d; ++i)
        if (header[static_cast<std::size_t>(i) + 1] != "e" + std::to_string(i))
            throw ParseError(path + ":1: embedding column " + std::to_string(i + 1) +
                             " must be named e" + std::to_string(i));

    CsvReader reader(path, header);
    EmbeddingSet set;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
        set.token_ids.push_back(fields[0]);
        std::vector<double> row(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            row[static_cast<std::size_t>(i)] =
                reader.as_double(fields[static_cast<std::size_t>(i) + 1],
                                 static_cast<std::size_t>(i) + 2);
        rows.push_back(std::move(row));
    }
    set.e.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < d; ++c)
            set.e(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    set.rebuild_index();
    if (set.index.size() != set.token_ids.size())
        throw DataError(path + ": duplicate token_id");
    return set;
}

void write_embeddings(const EmbeddingSet& set, const std::string& path) {
    std::string out = "token_id";
    for (int i = 0; i < set.dim(); ++i) out += ",e" + std::to_string(i);
    out += "\n";
    for (std::size_t r = 0; r < set.token_ids.size(); ++r) {
        out += set.token_ids[r];
        for (int c = 0; c < set.dim(); ++c) {
            out += ',';
            out += format_double(set.e(static_cast<Eigen::Index>(r), c));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace tonelab
