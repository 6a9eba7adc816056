#include "pvdamp/eval.hpp"

#include <algorithm>
#include <cmath>

#include "pvdamp/errors.hpp"

namespace pvdamp {

namespace {

void require_same(const ComplexImage& a, const ComplexImage& b) {
  require(a.same_shape(b), "images have different shapes");
  require(a.size() > 0, "images are empty");
}

double max_magnitude(const ComplexImage& x) {
  double m = 0.0;
  for (const auto& v : x.values()) m = std::max(m, std::abs(v));
  return m;
}

RealImage magnitude(const ComplexImage& x, double scale) {
  RealImage out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]) * scale;
  return out;
}

// Circular correlation with an odd-sized kernel centred on the output pixel.
RealImage circular_filter(const RealImage& img, const RealImage& kernel) {
  const int kr = kernel.rows() / 2, kc = kernel.cols() / 2;
  RealImage out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      double s = 0.0;
      for (int a = 0; a < kernel.rows(); ++a) {
        const int rr = ((r + a - kr) % img.rows() + img.rows()) % img.rows();
        for (int b = 0; b < kernel.cols(); ++b) {
          const int cc = ((c + b - kc) % img.cols() + img.cols()) % img.cols();
          s += kernel(a, b) * img(rr, cc);
        }
      }
      out(r, c) = s;
    }
  return out;
}

RealImage gaussian_window(int size, double sigma) {
  RealImage w(size, size);
  const int h = size / 2;
  double total = 0.0;
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b) {
      const double d2 = (a - h) * (a - h) + (b - h) * (b - h);
      w(a, b) = std::exp(-d2 / (2.0 * sigma * sigma));
      total += w(a, b);
    }
  for (auto& v : w.values()) v /= total;
  return w;
}

}  // namespace

RealImage support_mask(const ComplexImage& x_ref, double fraction) {
  require(fraction >= 0.0 && fraction <= 1.0, "support fraction must be in [0, 1]");
  const double cut = fraction * max_magnitude(x_ref);
  RealImage mask(x_ref.rows(), x_ref.cols());
  for (std::size_t i = 0; i < x_ref.size(); ++i) mask[i] = std::abs(x_ref[i]) >= cut ? 1.0 : 0.0;
  return mask;
}

double nmse_db(const ComplexImage& x_hat, const ComplexImage& x_ref, const RealImage& mask) {
  require_same(x_hat, x_ref);
  require(mask.rows() == x_ref.rows() && mask.cols() == x_ref.cols(), "mask and image shapes differ");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < x_ref.size(); ++i) {
    if (mask[i] == 0.0) continue;
    err += mask[i] * mask[i] * std::norm(x_hat[i] - x_ref[i]);
    ref += mask[i] * mask[i] * std::norm(x_ref[i]);
  }
  require(ref > 0.0, "reference has no energy inside the mask");
  if (!std::isfinite(err)) throw NumericalError("reconstruction contains non-finite values");
  if (err == 0.0) return kNmseFloorDb;
  return std::max(kNmseFloorDb, 10.0 * std::log10(err / ref));
}

double ssim(const ComplexImage& x_hat, const ComplexImage& x_ref, const RealImage& mask) {
  require_same(x_hat, x_ref);
  require(mask.rows() == x_ref.rows() && mask.cols() == x_ref.cols(), "mask and image shapes differ");
  const double peak = max_magnitude(x_ref);
  require(peak > 0.0, "reference image is zero");
  const RealImage a = magnitude(x_hat, 1.0 / peak), b = magnitude(x_ref, 1.0 / peak);
  RealImage aa(a.rows(), a.cols()), bb(a.rows(), a.cols()), ab(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const RealImage w = gaussian_window(11, 1.5);
  const RealImage mu_a = circular_filter(a, w), mu_b = circular_filter(b, w);
  const RealImage s_aa = circular_filter(aa, w), s_bb = circular_filter(bb, w), s_ab = circular_filter(ab, w);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0, count = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double va = s_aa[i] - mu_a[i] * mu_a[i];
    const double vb = s_bb[i] - mu_b[i] * mu_b[i];
    const double cov = s_ab[i] - mu_a[i] * mu_b[i];
    total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    count += 1.0;
  }
  require(count > 0.0, "SSIM mask selects no pixels");
  return total / count;
}

RealImage log_kernel() {
  const int size = 15, h = 7;
  const double sigma = 1.5, s2 = sigma * sigma;
  RealImage g(size, size);
  double total = 0.0;
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b) {
      const double d2 = (a - h) * (a - h) + (b - h) * (b - h);
      g(a, b) = std::exp(-d2 / (2.0 * s2));
      total += g(a, b);
    }
  RealImage k(size, size);
  double mean = 0.0;
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b) {
      const double d2 = (a - h) * (a - h) + (b - h) * (b - h);
      k(a, b) = g(a, b) / total * (d2 - 2.0 * s2) / (s2 * s2);
      mean += k(a, b);
    }
  mean /= size * size;
  for (auto& v : k.values()) v -= mean;
  return k;
}

double hfen(const ComplexImage& x_hat, const ComplexImage& x_ref) {
  require_same(x_hat, x_ref);
  RealImage diff(x_ref.rows(), x_ref.cols());
  double ref = 0.0;
  for (std::size_t i = 0; i < x_ref.size(); ++i) {
    diff[i] = std::abs(x_hat[i]) - std::abs(x_ref[i]);
    ref += std::norm(x_ref[i]);
  }
  require(ref > 0.0, "reference image is zero");
  const RealImage filtered = circular_filter(diff, log_kernel());
  double e = 0.0;
  for (double v : filtered.values()) e += v * v;
  return std::sqrt(e / ref);
}

nlohmann::json MetricsReport::to_json() const {
  return {{"nmse_db", nmse_db}, {"ssim", ssim}, {"hfen", hfen}, {"mask_fraction", mask_fraction}};
}

MetricsReport evaluate_metrics(const ComplexImage& x_hat, const ComplexImage& x_ref, double fraction) {
  const RealImage mask = support_mask(x_ref, fraction);
  MetricsReport m;
  m.nmse_db = nmse_db(x_hat, x_ref, mask);
  m.ssim = ssim(x_hat, x_ref, mask);
  m.hfen = hfen(x_hat, x_ref);
  double kept = 0.0;
  for (double v : mask.values()) kept += v;
  m.mask_fraction = kept / static_cast<double>(mask.size());
  return m;
}

bool EtaStats::variance_ok(const GaussianityBounds& b) const {
  return count > 1 && std::abs(var_re - 0.5) <= b.variance_tol && std::abs(var_im - 0.5) <= b.variance_tol;
}

bool EtaStats::kurtosis_ok(const GaussianityBounds& b) const {
  return count > 1 && std::abs(kurtosis_re) <= b.kurtosis_tol && std::abs(kurtosis_im) <= b.kurtosis_tol;
}

nlohmann::json EtaStats::to_json() const {
  return {{"count", count},         {"mean_re", mean.real()},        {"mean_im", mean.imag()},
          {"var_re", var_re},       {"var_im", var_im},              {"kurtosis_re", kurtosis_re},
          {"kurtosis_im", kurtosis_im}};
}

EtaStats eta_stats(std::span<const cplx> eta, const std::vector<bool>& included) {
  require(included.size() == eta.size(), "inclusion flags do not match eta length");
  EtaStats s;
  for (std::size_t j = 0; j < eta.size(); ++j)
    if (included[j]) {
      s.mean += eta[j];
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean /= static_cast<double>(s.count);
  double m2r = 0.0, m2i = 0.0, m4r = 0.0, m4i = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    if (!included[j]) continue;
    const double dr = eta[j].real() - s.mean.real(), di = eta[j].imag() - s.mean.imag();
    m2r += dr * dr;
    m2i += di * di;
    m4r += dr * dr * dr * dr;
    m4i += di * di * di * di;
  }
  const double n = static_cast<double>(s.count);
  s.var_re = m2r / n;
  s.var_im = m2i / n;
  s.kurtosis_re = m2r > 0.0 ? (m4r / n) / (s.var_re * s.var_re) - 3.0 : 0.0;
  s.kurtosis_im = m2i > 0.0 ? (m4i / n) / (s.var_im * s.var_im) - 3.0 : 0.0;
  return s;
}

IterationGaussianity gaussianity(const NormalizedResidual& eta, const GaussianityBounds& bounds, int iteration) {
  IterationGaussianity g;
  g.iteration = iteration;
  g.pooled = eta_stats(eta.eta, eta.included);
  for (const auto& b : eta.map.bands()) {
    std::vector<bool> inc(eta.included.begin() + b.offset, eta.included.begin() + b.end());
    g.bands.push_back(eta_stats(std::span<const cplx>(eta.eta).subspan(b.offset, b.count()), inc));
  }
  g.variance_ok = g.pooled.variance_ok(bounds);
  g.kurtosis_ok = g.pooled.kurtosis_ok(bounds);
  return g;
}

GaussianityReport se_report(const std::vector<NormalizedResidual>& per_iteration, const GaussianityBounds& bounds) {
  GaussianityReport r;
  r.bounds = bounds;
  for (std::size_t k = 0; k < per_iteration.size(); ++k)
    r.iterations.push_back(gaussianity(per_iteration[k], bounds, static_cast<int>(k)));
  return r;
}

bool GaussianityReport::all_pass() const {
  return !iterations.empty() &&
         std::all_of(iterations.begin(), iterations.end(), [](const auto& it) { return it.pass(); });
}

nlohmann::json GaussianityReport::to_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : iterations) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : it.bands) bands.push_back(b.to_json());
    its.push_back({{"iteration", it.iteration},
                   {"pooled", it.pooled.to_json()},
                   {"variance_ok", it.variance_ok},
                   {"kurtosis_ok", it.kurtosis_ok},
                   {"pass", it.pass()},
                   {"bands", bands}});
  }
  return {{"bounds", {{"variance_tol", bounds.variance_tol}, {"kurtosis_tol", bounds.kurtosis_tol}}},
          {"all_pass", all_pass()},
          {"iterations", its}};
}

}  // namespace pvdamp
