#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "stylo/records.hpp"

namespace stylo {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Terms are the non-layout code lexemes, case preserved. Term frequency
/// is the raw count; idf(t) = ln((1 + N) / (1 + df(t))) + 1; every
/// non-empty row is scaled to unit L2 norm.
class TfidfModel {
 public:
  static TfidfModel fit(const std::vector<std::string>& documents);

  /// Unseen terms are ignored; a document without known terms maps to a
  /// zero row.
  SparseRows transform(const std::vector<std::string>& documents) const;

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  /// Column of `term`, or -1.
  int index_of(const std::string& term) const;

  ordered_json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> terms_;  // sorted
  std::vector<double> idf_;
  std::map<std::string, int, std::less<>> index_;
};

std::vector<std::string> tfidf_terms(std::string_view code);

}  // namespace stylo
