#include "milt/metrics.hpp"

#include "milt/error.hpp"

namespace milt {

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix c(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) fail(ErrorKind::InvalidArgument, "confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) c.counts_[t * c.k_ + p] = rows[t][p];
  }
  return c;
}

void ConfusionMatrix::add(ClassId truth, ClassId predicted) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= k_ ||
      static_cast<std::size_t>(predicted) >= k_) {
    fail(ErrorKind::InvalidArgument, "class id outside the confusion matrix");
  }
  ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(predicted)];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += (*this)(i, i);
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += (*this)(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) s += (*this)(t, predicted);
  return s;
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(k_, std::vector<std::uint64_t>(k_));
  for (std::size_t t = 0; t < k_; ++t) {
    for (std::size_t p = 0; p < k_; ++p) out[t][p] = (*this)(t, p);
  }
  return out;
}

Metrics score(const ConfusionMatrix& confusion) {
  const std::size_t k = confusion.classes();
  if (k == 0) fail(ErrorKind::InvalidArgument, "empty confusion matrix");
  Metrics m;
  const auto total = confusion.total();
  m.accuracy = total == 0 ? 0.0 : static_cast<double>(confusion.trace()) / static_cast<double>(total);
  for (std::size_t c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(confusion(c, c));
    const auto predicted = static_cast<double>(confusion.column_sum(c));
    const auto actual = static_cast<double>(confusion.row_sum(c));
    const double p = predicted > 0 ? tp / predicted : 0.0;
    const double r = actual > 0 ? tp / actual : 0.0;
    const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    m.class_precision.push_back(p);
    m.class_recall.push_back(r);
    m.class_f1.push_back(f);
    m.precision += p;
    m.recall += r;
    m.f1 += f;
  }
  m.precision /= static_cast<double>(k);
  m.recall /= static_cast<double>(k);
  m.f1 /= static_cast<double>(k);
  return m;
}

nlohmann::json to_json(const ConfusionMatrix& c) { return c.rows(); }

nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"class_precision", m.class_precision},
          {"class_recall", m.class_recall},
          {"class_f1", m.class_f1}};
}

}  // namespace milt
