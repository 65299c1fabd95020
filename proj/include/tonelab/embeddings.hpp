#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace tonelab {

// One d-dimensional meaning vector per token, rows aligned with token_ids.
struct EmbeddingSet {
    std::vector<std::string> token_ids;
    Eigen::MatrixXd e;  // n x d
    std::map<std::string, int> index;

    int dim() const { return static_cast<int>(e.cols()); }
    void rebuild_index();
    // Row for a token id; throws DataError when absent.
    Eigen::RowVectorXd row_of(const std::string& token_id) const;
};

// embeddings.csv: token_id,e0,...,e{d-1}
EmbeddingSet load_embeddings(const std::string& path);
void write_embeddings(const EmbeddingSet& set, const std::string& path);

}  // namespace tonelab
