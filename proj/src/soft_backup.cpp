#include "rrpi/soft_backup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rrpi/error.hpp"

namespace rrpi {

namespace {

void check_rows(std::span<const double> q_row, std::span<const double> log_mu_row, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("soft_value: alpha must be > 0");
  if (q_row.size() != log_mu_row.size()) throw InvalidInput("soft_value: length mismatch");
  if (q_row.empty()) throw InvalidInput("soft_value: empty row");
  for (double lm : log_mu_row) {
    if (!std::isfinite(lm)) throw InvalidInput("soft_value: reference row lacks full support");
  }
  for (double q : q_row) {
    if (!std::isfinite(q)) throw InvalidInput("soft_value: non-finite q");
  }
}

}  // namespace

double logsumexp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  return m + std::log(sum);
}

double soft_value_unchecked(std::span<const double> q_row, std::span<const double> log_mu_row,
                            double alpha) {
  // Shift by max q instead of max exponent: the exponents are then all
  // <= log mu <= 0, and the argmax-q term alone keeps the sum away from zero.
  const double c = *std::max_element(q_row.begin(), q_row.end());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    m = std::max(m, log_mu_row[i] + (q_row[i] - c) / alpha);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    sum += std::exp(log_mu_row[i] + (q_row[i] - c) / alpha - m);
  }
  return c + alpha * (m + std::log(sum));
}

SoftValueResult soft_value(std::span<const double> q_row, std::span<const double> log_mu_row,
                           double alpha) {
  check_rows(q_row, log_mu_row, alpha);
  SoftValueResult out;
  out.value = soft_value_unchecked(q_row, log_mu_row, alpha);

  std::vector<double> z(q_row.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = log_mu_row[i] + q_row[i] / alpha;
  const double lz = logsumexp(z);
  out.argmax_policy_row.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.argmax_policy_row[i] = std::exp(z[i] - lz);
  return out;
}

double kl_divergence(std::span<const double> log_p_row, std::span<const double> log_q_row) {
  if (log_p_row.size() != log_q_row.size()) throw InvalidInput("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < log_p_row.size(); ++i) {
    if (!std::isfinite(log_p_row[i]) || !std::isfinite(log_q_row[i])) {
      throw InvalidInput("kl_divergence: non-finite input");
    }
    kl += std::exp(log_p_row[i]) * (log_p_row[i] - log_q_row[i]);
  }
  return kl;
}

double duality_gap(std::span<const double> q_row, std::span<const double> log_mu_row, double alpha,
                   std::span<const double> candidate_row) {
  check_rows(q_row, log_mu_row, alpha);
  if (candidate_row.size() != q_row.size()) throw InvalidInput("duality_gap: length mismatch");
  double total = 0.0;
  std::vector<double> log_c(candidate_row.size());
  for (std::size_t i = 0; i < candidate_row.size(); ++i) {
    if (!(candidate_row[i] > 0.0) || !std::isfinite(candidate_row[i])) {
      throw InvalidInput("duality_gap: candidate lacks full support");
    }
    total += candidate_row[i];
    log_c[i] = std::log(candidate_row[i]);
  }
  if (std::abs(total - 1.0) > 1e-10) throw InvalidInput("duality_gap: candidate not normalized");

  double expected_q = 0.0;
  for (std::size_t i = 0; i < q_row.size(); ++i) expected_q += candidate_row[i] * q_row[i];
  const double value = soft_value_unchecked(q_row, log_mu_row, alpha);
  return value - (expected_q - alpha * kl_divergence(log_c, log_mu_row));
}

}  // namespace rrpi
