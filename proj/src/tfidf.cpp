#include "stylo/tfidf.hpp"

#include <cmath>
#include <set>

#include "stylo/tokenizer.hpp"

namespace stylo {

std::vector<std::string> tfidf_terms(std::string_view code) {
  std::vector<std::string> out;
  for (auto& lx : code_lexemes(code))
    if (!is_layout_lexeme(lx)) out.push_back(std::move(lx));
  return out;
}

TfidfModel TfidfModel::fit(const std::vector<std::string>& documents) {
  if (documents.empty()) throw ValidationError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, long> df;
  for (const auto& doc : documents) {
    auto terms = tfidf_terms(doc);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) ++df[t];
  }
  TfidfModel m;
  const double n = static_cast<double>(documents.size());
  for (const auto& [term, count] : df) {
    m.index_.emplace(term, static_cast<int>(m.terms_.size()));
    m.terms_.push_back(term);
    m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return m;
}

int TfidfModel::index_of(const std::string& term) const {
  auto it = index_.find(term);
  return it == index_.end() ? -1 : it->second;
}

SparseRows TfidfModel::transform(const std::vector<std::string>& documents) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t row = 0; row < documents.size(); ++row) {
    std::map<int, double> counts;
    for (const auto& t : tfidf_terms(documents[row]))
      if (int col = index_of(t); col >= 0) counts[col] += 1.0;
    double norm = 0.0;
    for (auto& [col, v] : counts) {
      v *= idf_[static_cast<std::size_t>(col)];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (const auto& [col, v] : counts) triplets.emplace_back(static_cast<int>(row), col, v / norm);
  }
  SparseRows x(static_cast<Eigen::Index>(documents.size()), static_cast<Eigen::Index>(terms_.size()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

ordered_json TfidfModel::to_json() const {
  ordered_json j;
  j["terms"] = terms_;
  j["idf"] = idf_;
  return j;
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
  TfidfModel m;
  m.terms_ = j.at("terms").get<std::vector<std::string>>();
  m.idf_ = j.at("idf").get<std::vector<double>>();
  if (m.terms_.size() != m.idf_.size()) throw ValidationError("TF-IDF vocabulary and idf lengths differ");
  for (std::size_t i = 0; i < m.terms_.size(); ++i)
    if (!m.index_.emplace(m.terms_[i], static_cast<int>(i)).second)
      throw ValidationError("duplicate TF-IDF term '" + m.terms_[i] + "'");
  return m;
}

}  // namespace stylo
