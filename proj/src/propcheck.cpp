#include "redmap/propcheck.hpp"

#include <omp.h>

#include <cmath>
#include <sstream>

namespace redmap {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Affine: return "affine";
    case Family::Nonlinear: return "nonlinear";
    case Family::MorseBott: return "morse_bott";
    case Family::Interlacing: return "interlacing";
    case Family::Correction: return "correction";
  }
  return "unknown";
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> fams = {Family::Affine, Family::Nonlinear, Family::MorseBott, Family::Interlacing,
                                           Family::Correction};
  return fams;
}

std::uint64_t instance_seed(std::uint64_t base, Family f, int index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(f) * 1000003ULL +
                                                    static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Mat random_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

namespace {

Vec random_vec(int n, std::mt19937_64& rng) { return random_gaussian(n, 1, rng).col(0); }

Mat random_orthogonal(int n, std::mt19937_64& rng) {
  const Eigen::HouseholderQR<Mat> qr(random_gaussian(n, n, rng));
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Objective corrupted(Objective f) {
  auto h = f.hessian;
  f.hessian = [h](const Vec& x) {
    Mat m = h(x);
    m(0, 0) += 0.5 * (1.0 + m.norm());
    return m;
  };
  return f;
}

// First line of defence for every objective family.
std::optional<InstanceOutcome> derivative_gate(const Objective& f, const Vec& x) {
  const DerivativeCheck c = check_derivatives(f, x);
  if (c.ok) return std::nullopt;
  return InstanceOutcome{false, false,
                         "derivative check failed: grad err " + fmt(c.grad_rel_err) + ", hess err " +
                             fmt(c.hess_rel_err)};
}

InstanceOutcome affine_instance(std::uint64_t seed, bool corrupt) {
  std::mt19937_64 rng(seed);
  constexpr int n1 = 3;
  constexpr int n2 = 3;
  const Mat h = random_symmetric(n1 + n2, -10.0, 10.0, rng);
  Objective f = quadratic_objective(n1, h, random_vec(n1 + n2, rng));
  if (corrupt) f = corrupted(std::move(f));
  const ReductionMapping psi = ReductionMapping::affine(random_gaussian(n2, n1, rng), random_vec(n2, rng));
  const Region region{random_vec(n1, rng), 1.0, 3, seed};
  if (auto gate = derivative_gate(f, psi.phi(region.center))) return *gate;

  const ReducedProblem p(f, psi);
  const RegionSpectra s = region_spectra(p, region, kDefaultMultTol, Exec::Serial);
  if (s.delta_max <= 1e-6 || s.epsilon <= 1e-6) return {true, false, "no gap or tangent dominant subspace"};
  const AffineBound b = affine_bound_from(s);
  return {false, b.holds && !b.vacuous, "lhs=" + fmt(b.lhs) + " rhs=" + fmt(b.rhs)};
}

InstanceOutcome nonlinear_instance(std::uint64_t seed, bool corrupt) {
  std::mt19937_64 rng(seed);
  constexpr int n1 = 2;
  constexpr int n2 = 2;
  const Mat h = random_symmetric(n1 + n2, -10.0, 10.0, rng);
  Objective f = quadratic_objective(n1, h, random_vec(n1 + n2, rng));
  if (corrupt) f = corrupted(std::move(f));
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  Vec c(n2);
  for (int k = 0; k < n2; ++k) c(k) = amp(rng);
  const Mat a = random_gaussian(n2, n1, rng);
  const Vec b = random_vec(n2, rng);
  const Mat w = random_gaussian(n2, n1, rng);
  const ReductionMapping psi = wavy_mapping(a, b, c, w);
  const Region region{random_vec(n1, rng), 0.5, 4, seed};
  if (auto gate = derivative_gate(f, psi.phi(region.center))) return *gate;

  const ReducedProblem p(f, psi);
  const RegionSpectra s = region_spectra(p, region, kDefaultMultTol, Exec::Serial);
  const NonlinearBound nb = nonlinear_bound_from(s);
  if (nb.vacuous) return {true, false, "no usable spectral gap"};
  return {false, nb.holds && nb.eucl_holds,
          "lhs=" + fmt(nb.lhs) + " rhs=" + fmt(nb.rhs) + " eucl_lhs=" + fmt(nb.eucl_lhs) +
              " eucl_rhs=" + fmt(nb.eucl_rhs)};
}

InstanceOutcome morse_bott_check(std::uint64_t seed, bool corrupt) {
  MorseBottInstance inst = morse_bott_instance(seed);
  if (corrupt) inst.objective = corrupted(std::move(inst.objective));
  if (auto gate = derivative_gate(inst.objective, inst.mapping.phi(inst.minimiser))) return *gate;
  const ReducedProblem p(inst.objective, inst.mapping);
  const MbConstants mb = mb_constants(p, inst.minimiser, inst.tangent);
  if (!mb.tangent_contained) return {true, false, "solution tangent leaves col(DPhi)"};
  return {false, mb.holds,
          "mu_F=" + fmt(mb.mu_F) + " bound=" + fmt(mb.bound) + " mu_f=" + fmt(mb.mu_f) +
              " kernel_dim=" + std::to_string(inst.tangent.cols())};
}

InstanceOutcome interlacing_instance(std::uint64_t seed, bool corrupt) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 10);
  const int n = dim(rng);
  std::uniform_int_distribution<int> sub(1, n - 1);
  const int k = sub(rng);
  const Mat g = random_gaussian(n, n, rng);
  const Mat a = 0.5 * (g + g.transpose());
  const Mat b = random_gaussian(n, k, rng);
  const Vec ev = sym_eig(SymMatrix(a)).values;
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const Mat fed = corrupt ? Mat(a + 3.0 * scale * Mat::Identity(n, n)) : a;
  const Extremes e = gen_eig_extremes(SymMatrix(b.transpose() * fed * b), SymMatrix(b.transpose() * b));
  const double slack = 1e-10 * scale;
  const bool ok = e.min >= ev(0) - slack && e.max <= ev(n - 1) + slack;
  return {false, ok,
          "n=" + std::to_string(n) + " k=" + std::to_string(k) + " gen=[" + fmt(e.min) + "," + fmt(e.max) +
              "] spec=[" + fmt(ev(0)) + "," + fmt(ev(n - 1)) + "]"};
}

InstanceOutcome correction_instance(std::uint64_t seed, bool corrupt) {
  std::mt19937_64 rng(seed);
  constexpr int n1 = 2;
  constexpr int n2 = 2;
  const Mat h = random_symmetric(n1 + n2, 0.1, 10.0, rng);
  Objective f = quadratic_objective(n1, h, random_vec(n1 + n2, rng));
  if (corrupt) f = corrupted(std::move(f));
  const Mat w = random_gaussian(n2, n1, rng);
  const Mat v = random_gaussian(n2, n1, rng);
  const ReductionMapping psi = ReductionMapping::implicit_argmin(quartic_inner_problem(w, v), Vec::Zero(n2));
  const Vec x1 = random_vec(n1, rng);
  if (auto gate = derivative_gate(f, psi.phi(x1))) return *gate;

  const ReducedProblem p(f, psi);
  const CorrectionBound cb = correction_bound(p, x1);
  return {false, cb.corrected_holds,
          "c_norm=" + fmt(cb.c_norm) + " bound=" + fmt(cb.bound) + " corrected_bound=" + fmt(cb.corrected_bound)};
}

}  // namespace

Mat random_symmetric(int n, double lo, double hi, std::mt19937_64& rng) {
  const Mat q = random_orthogonal(n, rng);
  std::uniform_real_distribution<double> u(lo, hi);
  Vec lam(n);
  for (int i = 0; i < n; ++i) lam(i) = u(rng);
  const Mat m = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Objective quadratic_objective(int n1, Mat h, Vec x_star, double min_value) {
  if (h.rows() != h.cols() || h.rows() != x_star.size() || n1 < 1 || n1 >= h.rows()) {
    throw Error(Errc::DimensionMismatch, "quadratic_objective: inconsistent sizes");
  }
  Objective f;
  f.n1 = n1;
  f.n2 = static_cast<int>(h.rows()) - n1;
  f.known_min_value = min_value;
  f.value = [h, x_star, min_value](const Vec& x) {
    const Vec d = x - x_star;
    return 0.5 * d.dot(h * d) + min_value;
  };
  f.gradient = [h, x_star](const Vec& x) { return Vec(h * (x - x_star)); };
  f.hessian = [h](const Vec&) { return h; };
  return f;
}

ReductionMapping wavy_mapping(Mat a, Vec b, Vec c, Mat w) {
  const int n1 = static_cast<int>(a.cols());
  const int n2 = static_cast<int>(a.rows());
  ReductionMapping::ClosedForm fns;
  fns.value = [a, b, c, w](const Vec& x) { return Vec(a * x + b + c.cwiseProduct(Vec((w * x).array().sin()))); };
  fns.jacobian = [a, c, w](const Vec& x) {
    const Vec cs = c.cwiseProduct(Vec((w * x).array().cos()));
    return Mat(a + cs.asDiagonal() * w);
  };
  fns.hessian = [c, w, n1, n2](const Vec& x) {
    const Vec s = (w * x).array().sin();
    Tensor3 t(n2, n1, n1);
    for (int k = 0; k < n2; ++k) {
      t.slices[static_cast<std::size_t>(k)] = (-c(k) * s(k)) * w.row(k).transpose() * w.row(k);
    }
    return t;
  };
  return ReductionMapping::closed_form(n1, n2, std::move(fns)).named("wavy");
}

InnerProblem quartic_inner_problem(Mat w, Mat v) {
  const int n1 = static_cast<int>(w.cols());
  const int n2 = static_cast<int>(w.rows());
  InnerProblem g;
  g.n1 = n1;
  g.n2 = n2;
  g.value = [w, v](const Vec& x, const Vec& u) {
    const Vec a = w * x;
    const Vec c = v * x;
    double s = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      s += 0.5 * (1.0 + a(k) * a(k)) * u(k) * u(k) + 0.25 * std::pow(u(k), 4) - u(k) * c(k);
    }
    return s;
  };
  g.grad_u = [w, v](const Vec& x, const Vec& u) {
    const Vec a = w * x;
    return Vec((1.0 + a.array().square()) * u.array() + u.array().cube() - (v * x).array());
  };
  g.hess_uu = [w](const Vec& x, const Vec& u) {
    const Vec a = w * x;
    return Mat(Vec(1.0 + a.array().square() + 3.0 * u.array().square()).asDiagonal());
  };
  g.hess_x1u = [w, v](const Vec& x, const Vec& u) {
    const Vec a = w * x;
    return Mat(Vec(2.0 * a.cwiseProduct(u)).asDiagonal() * w - v);
  };
  g.d3_x1x1u = [w, n1, n2](const Vec&, const Vec& u) {
    Tensor3 t(n2, n1, n1);
    for (int k = 0; k < n2; ++k) t.slices[static_cast<std::size_t>(k)] = 2.0 * u(k) * w.row(k).transpose() * w.row(k);
    return t;
  };
  g.d3_x1uu = [w, n1, n2](const Vec& x, const Vec&) {
    const Vec a = w * x;
    Tensor3 t(n2, n1, n2);
    for (int k = 0; k < n2; ++k) {
      for (int i = 0; i < n1; ++i) t(k, i, k) = 2.0 * a(k) * w(k, i);
    }
    return t;
  };
  g.d3_uuu = [n2](const Vec&, const Vec& u) {
    Tensor3 t(n2, n2, n2);
    for (int k = 0; k < n2; ++k) t(k, k, k) = 6.0 * u(k);
    return t;
  };
  return g;
}

MorseBottInstance morse_bott_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr int n1 = 3;
  constexpr int n2 = 3;
  constexpr int n = n1 + n2;
  std::uniform_int_distribution<int> kdim(1, 2);
  const int d = kdim(rng);

  const Mat a = random_gaussian(n2, n1, rng);
  const Vec b = random_vec(n2, rng);
  Mat dphi(n, n1);
  dphi << Mat::Identity(n1, n1), a;
  const Mat tangent = orthonormal_basis(dphi * random_gaussian(n1, d, rng));
  const Mat normal = orthogonal_complement(tangent);
  std::uniform_real_distribution<double> mu(0.5, 10.0);
  Vec lam(n - d);
  for (int i = 0; i < n - d; ++i) lam(i) = mu(rng);
  Mat h = normal * lam.asDiagonal() * normal.transpose();
  h = 0.5 * (h + h.transpose()).eval();

  const Vec minimiser = random_vec(n1, rng);
  Vec x_bar(n);
  x_bar << minimiser, a * minimiser + b;
  return {quadratic_objective(n1, h, x_bar), ReductionMapping::affine(a, b), minimiser, tangent, h};
}

InstanceOutcome run_instance(Family f, std::uint64_t seed, bool corrupt_hessian) {
  try {
    switch (f) {
      case Family::Affine: return affine_instance(seed, corrupt_hessian);
      case Family::Nonlinear: return nonlinear_instance(seed, corrupt_hessian);
      case Family::MorseBott: return morse_bott_check(seed, corrupt_hessian);
      case Family::Interlacing: return interlacing_instance(seed, corrupt_hessian);
      case Family::Correction: return correction_instance(seed, corrupt_hessian);
    }
  } catch (const Error& e) {
    return {false, false, std::string("error: ") + e.what()};
  }
  return {false, false, "unknown family"};
}

std::vector<FamilyResult> run_propcheck(const PropOptions& opts) {
  if (opts.count < 0) throw Error(Errc::InvalidParam, "count must be >= 0");
  std::vector<FamilyResult> results;
  for (Family fam : all_families()) {
    std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(opts.count));
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
    for (int i = 0; i < opts.count; ++i) {
      outcomes[static_cast<std::size_t>(i)] = run_instance(fam, instance_seed(opts.seed, fam, i), opts.corrupt_hessian);
    }
    FamilyResult r;
    r.family = fam;
    r.instances = opts.count;
    for (int i = 0; i < opts.count; ++i) {
      const InstanceOutcome& o = outcomes[static_cast<std::size_t>(i)];
      if (o.skipped) {
        ++r.skipped;
      } else if (o.passed) {
        ++r.passed;
      } else {
        ++r.failed;
        if (!r.first_failure_index) {
          r.first_failure_index = i;
          r.first_failure_seed = instance_seed(opts.seed, fam, i);
          r.first_failure_detail = o.detail;
        }
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace redmap
