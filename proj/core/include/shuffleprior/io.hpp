#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shuffleprior/models.hpp"
#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

/// Headered CSV: columns named x1..xd and y1..yq (any order, numbered from 1).
LinkedDataset read_dataset_csv(std::istream& is);
LinkedDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& os, const LinkedDataset& data);

/// Headerless numeric CSV; "-inf" entries are allowed.
Eigen::MatrixXd read_matrix_csv(std::istream& is);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// One integer label per line; a non-numeric first line is treated as a header.
std::vector<std::size_t> read_block_ids(std::istream& is);
std::vector<std::size_t> read_block_ids(const std::string& path);

/// Columns i,pi with 1-based indices.
void write_permutation_csv(std::ostream& os, const Permutation& p);
Permutation read_permutation_csv(std::istream& is);

/// Parameters as JSON, plus the permutation (1-based) when given.
void write_params_json(std::ostream& os, const ModelParams& params, const Permutation* pi = nullptr);

}  // namespace shuffleprior
