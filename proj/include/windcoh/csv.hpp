#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace windcoh::csv {

// Row-major CSV with 17 significant digits (round-trips doubles exactly).
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

// Table with a header row; first column typically time.
void write_table(const std::string& path,
                 const std::vector<std::string>& header,
                 const Eigen::MatrixXd& columns);

std::string format_double(double v);  // shared %.17g formatting

}  // namespace windcoh::csv
