#include "bip/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace bip {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;   // real -> half-complex
  fftw_plan backward = nullptr;  // half-complex -> real
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// key: (rank, n)
const PlanPair& plans_for(int rank, int n) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find({rank, n});
  if (it != cache.end()) return it->second;

  const std::size_t real_len = rank == 2 ? std::size_t(n) * n : std::size_t(n);
  const std::size_t cplx_len = rank == 2 ? std::size_t(n) * (n / 2 + 1) : std::size_t(n / 2 + 1);
  std::vector<double> r(real_len);
  std::vector<Complex> c(cplx_len);
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  if (rank == 2) {
    p.forward = fftw_plan_dft_r2c_2d(n, n, r.data(), cp, flags);
    p.backward = fftw_plan_dft_c2r_2d(n, n, cp, r.data(), flags);
  } else {
    p.forward = fftw_plan_dft_r2c_1d(n, r.data(), cp, flags);
    p.backward = fftw_plan_dft_c2r_1d(n, cp, r.data(), flags);
  }
  return cache.emplace(std::make_pair(rank, n), p).first->second;
}

int wrap(int k, int m) { return ((k % m) + m) % m; }

}  // namespace

TorusTransform::TorusTransform(const Geometry& g, int grid_size)
    : geom_(g), m_(grid_size), half_(grid_size / 2 + 1) {
  if (!g.is_torus()) throw GeometryMismatch("TorusTransform requires a torus geometry");
  if (grid_size < g.min_grid_size()) {
    throw AliasingError("grid size " + std::to_string(grid_size) + " aliases modes of " +
                        g.describe());
  }
  slot_.resize(g.size());
  conj_slot_.assign(g.size(), -1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& k = g.mode(i);
    slot_[i] = wrap(k.k1, m_) * half_ + k.k2;
    if (k.k2 == 0) conj_slot_[i] = wrap(-k.k1, m_) * half_;
  }
  spectrum_.assign(std::size_t(m_) * half_, Complex{});
  real_.assign(std::size_t(m_) * m_, 0.0);
  plans_for(2, m_);
}

void TorusTransform::synthesize(std::span<const Complex> coeffs, std::span<double> out) {
  std::fill(spectrum_.begin(), spectrum_.end(), Complex{});
  for (std::size_t i = 0; i < slot_.size(); ++i) {
    spectrum_[slot_[i]] = coeffs[i];
    if (conj_slot_[i] >= 0) spectrum_[conj_slot_[i]] = std::conj(coeffs[i]);
  }
  // c2r sums the full plane with the k2 < 0 half implied by conjugate
  // symmetry, giving 2 Re sum over stored k of c_k e^{2 pi i k.x}.
  const auto& p = plans_for(2, m_);
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(spectrum_.data()), out.data());
}

void TorusTransform::analyze(std::span<const double> grid, std::span<Complex> coeffs) {
  std::copy(grid.begin(), grid.end(), real_.begin());
  const auto& p = plans_for(2, m_);
  fftw_execute_dft_r2c(p.forward, real_.data(), reinterpret_cast<fftw_complex*>(spectrum_.data()));
  const double scale = 1.0 / (double(m_) * m_);
  for (std::size_t i = 0; i < slot_.size(); ++i) coeffs[i] = spectrum_[slot_[i]] * scale;
}

std::vector<double> autocovariance(std::span<const double> centred) {
  const std::size_t n = centred.size();
  if (n == 0) return {};
  int padded = 1;
  while (std::size_t(padded) < 2 * n) padded <<= 1;
  std::vector<double> r(padded, 0.0);
  std::copy(centred.begin(), centred.end(), r.begin());
  std::vector<Complex> c(padded / 2 + 1);
  const auto& p = plans_for(1, padded);
  fftw_execute_dft_r2c(p.forward, r.data(), reinterpret_cast<fftw_complex*>(c.data()));
  for (auto& z : c) z = std::norm(z);
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(c.data()), r.data());
  std::vector<double> acov(n);
  for (std::size_t lag = 0; lag < n; ++lag) acov[lag] = r[lag] / (double(padded) * double(n));
  return acov;
}

}  // namespace bip
