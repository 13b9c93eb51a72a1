#include "redmap/spectral.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

namespace redmap {

void validate(const Region& r) {
  if (r.center.size() < 1) throw Error(Errc::InvalidParam, "region center is empty");
  if (!r.center.allFinite()) throw Error(Errc::NonFinite, "region center is not finite");
  if (!(r.radius > 0.0) || !std::isfinite(r.radius)) throw Error(Errc::InvalidParam, "region radius must be > 0");
  if (r.samples < 1) throw Error(Errc::InvalidParam, "region needs at least one sample");
}

std::vector<Vec> sample_region(const Region& r) {
  validate(r);
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(r.samples));
  pts.push_back(r.center);
  std::mt19937_64 rng(r.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = r.center.size();
  // Uniform direction times radius U^(1/n); cube rejection starves in high dimension.
  while (static_cast<int>(pts.size()) < r.samples) {
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = normal(rng);
    const double len = d.norm();
    if (len == 0.0) continue;
    const double rho = r.radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    pts.push_back(r.center + (rho / len) * d);
  }
  return pts;
}

namespace {

struct DominantSplit {
  std::vector<Eigen::Index> dominant;
  double sigma_max = 0.0;
  double sigma_next = 0.0;  // largest |lambda| outside the cluster
  bool has_next = false;
};

DominantSplit split_dominant(const Vec& values, double mult_tol) {
  DominantSplit s;
  s.sigma_max = values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double a = std::abs(values(i));
    if (a >= (1.0 - mult_tol) * s.sigma_max) {
      s.dominant.push_back(i);
    } else {
      s.has_next = true;
      s.sigma_next = std::max(s.sigma_next, a);
    }
  }
  return s;
}

Mat select_columns(const Mat& m, const std::vector<Eigen::Index>& idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(idx[c]);
  return out;
}

// 1 - largest cosine between the subspace spanned by the orthonormal columns
// of `subspace` and the orthonormal basis `tangent`.
double nontangency(const Mat& tangent, const Mat& subspace) {
  if (subspace.cols() == 0) return 1.0;
  const double c = spectral_norm(tangent.transpose() * subspace);
  return std::clamp(1.0 - c, 0.0, 1.0);
}

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

PointSpectra point_spectra(const ReducedProblem& p, const Vec& x1, double mult_tol) {
  const ReducedPoint rp = p.evaluate(x1, 2);
  PointSpectra s;

  const EigenPairs full = sym_eig(SymMatrix(rp.hess_full));
  const DominantSplit dom = split_dominant(full.values, mult_tol);
  s.sigma_max_full = dom.sigma_max;
  s.multiplicity = static_cast<int>(dom.dominant.size());
  s.gap = dom.has_next ? dom.sigma_max - dom.sigma_next : 0.0;
  const Mat tangent = orthonormal_basis(rp.d_phi);
  s.epsilon = nontangency(tangent, select_columns(full.vectors, dom.dominant));

  const SymMatrix metric(rp.metric);
  const Vec pencil = gen_eig_values(SymMatrix(rp.hess), metric);
  s.riem_min = pencil(0);
  s.riem_max = pencil(pencil.size() - 1);
  s.riem_sigma = max_abs(pencil);
  s.gauss_riem_sigma = max_abs(gen_eig_values(SymMatrix(rp.gauss_part), metric));

  const Vec eucl = sym_eig(SymMatrix(rp.hess)).values;
  s.eucl_min = eucl(0);
  s.eucl_max = eucl(eucl.size() - 1);
  s.eucl_sigma = max_abs(eucl);

  const Vec r_eig = sym_eig(metric).values;
  s.m_phi = r_eig(0);
  s.M_phi = r_eig(r_eig.size() - 1);

  s.q = injective_norm_bound(rp.d2_psi);
  s.z = rp.grad_x2().norm();
  s.correction_norm = max_abs(sym_eig(SymMatrix(rp.correction)).values);
  return s;
}

std::vector<PointSpectra> scan_region(const ReducedProblem& p, const Region& region, double mult_tol, Exec exec) {
  const std::vector<Vec> pts = sample_region(region);
  std::vector<PointSpectra> out(pts.size());
  const auto n = static_cast<long>(pts.size());

  if (exec == Exec::Serial) {
    for (long i = 0; i < n; ++i) out[i] = point_spectra(p, pts[i], mult_tol);
    return out;
  }

  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = point_spectra(p, pts[i], mult_tol);
    } catch (...) {
#pragma omp critical(redmap_scan_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

RegionSpectra reduce_region(const std::vector<PointSpectra>& pts) {
  if (pts.empty()) throw Error(Errc::EmptySample, "no sample points");
  constexpr double inf = std::numeric_limits<double>::infinity();
  RegionSpectra r;
  r.samples = pts.size();
  r.multiplicity = pts.front().multiplicity;
  r.epsilon = inf;
  r.delta_max = inf;
  r.curvature_gap = inf;
  r.m_phi = inf;
  for (const auto& s : pts) {
    r.beta_f = std::max(r.beta_f, s.sigma_max_full);
    r.beta_F_riem = std::max(r.beta_F_riem, s.riem_sigma);
    r.beta_F_eucl = std::max(r.beta_F_eucl, s.eucl_sigma);
    r.epsilon = std::min(r.epsilon, s.epsilon);
    r.delta_max = std::min(r.delta_max, s.gap);
    r.curvature_gap = std::min(r.curvature_gap, s.sigma_max_full - s.gauss_riem_sigma);
    r.m_phi = std::min(r.m_phi, s.m_phi);
    r.M_phi = std::max(r.M_phi, s.M_phi);
    r.q = std::max(r.q, s.q);
    r.z = std::max(r.z, s.z);
    r.correction_norm = std::max(r.correction_norm, s.correction_norm);
  }
  return r;
}

RegionSpectra region_spectra(const ReducedProblem& p, const Region& region, double mult_tol, Exec exec) {
  return reduce_region(scan_region(p, region, mult_tol, exec));
}

double smoothness_riemannian(const ReducedProblem& p, const Region& region, Exec exec) {
  return region_spectra(p, region, kDefaultMultTol, exec).beta_F_riem;
}

double smoothness_euclidean(const ReducedProblem& p, const Region& region, Exec exec) {
  return region_spectra(p, region, kDefaultMultTol, exec).beta_F_eucl;
}

Nontangency nontangency_epsilon(const ReducedProblem& p, const Vec& x1, double mult_tol) {
  if (!(mult_tol > 0.0 && mult_tol < 1.0)) throw Error(Errc::InvalidParam, "mult_tol must lie in (0,1)");
  const PointSpectra s = point_spectra(p, x1, mult_tol);
  return {s.epsilon, s.multiplicity};
}

double spectral_gap_max(const ReducedProblem& p, const Region& region, double mult_tol, Exec exec) {
  return region_spectra(p, region, mult_tol, exec).delta_max;
}

namespace {

double improvement(double delta, double eps) { return delta * (2.0 * eps - eps * eps); }

bool within(double lhs, double rhs) { return lhs <= rhs + 1e-8 * (1.0 + std::abs(rhs)); }

bool gap_is_vacuous(const RegionSpectra& s, double mult_tol) { return s.delta_max <= mult_tol * s.beta_f; }

}  // namespace

AffineBound affine_bound_from(const RegionSpectra& s, double mult_tol) {
  AffineBound b;
  b.lhs = s.beta_F_riem;
  b.rhs = s.beta_f - improvement(s.delta_max, s.epsilon);
  b.vacuous = gap_is_vacuous(s, mult_tol);
  b.holds = b.vacuous || within(b.lhs, b.rhs);
  return b;
}

AffineBound check_affine_bound(const ReducedProblem& p, const Region& region, double mult_tol, Exec exec) {
  if (!p.mapping().is_affine()) {
    throw Error(Errc::WrongMappingKind, "affine smoothness bound needs a constant or affine mapping");
  }
  return affine_bound_from(region_spectra(p, region, mult_tol, exec), mult_tol);
}

NonlinearBound nonlinear_bound_from(const RegionSpectra& s, double mult_tol) {
  NonlinearBound b;
  b.q = s.q;
  b.z = s.z;
  b.m_phi = s.m_phi;
  b.curvature_gap = s.curvature_gap;
  const double base = s.beta_f - improvement(s.delta_max, s.epsilon);
  const double qz = s.q * s.z;
  b.lhs = s.beta_F_riem;
  b.rhs = base + qz / s.m_phi;
  b.vacuous = gap_is_vacuous(s, mult_tol);
  b.hypothesis_failed = qz > 0.0 && !(qz / s.m_phi < s.curvature_gap);
  b.holds = b.vacuous || within(b.lhs, b.rhs);
  b.eucl_lhs = s.beta_F_eucl;
  b.eucl_rhs = s.M_phi * base + qz;
  b.eucl_holds = b.vacuous || within(b.eucl_lhs, b.eucl_rhs);
  return b;
}

NonlinearBound check_nonlinear_bound(const ReducedProblem& p, const Region& region, double mult_tol, Exec exec) {
  return nonlinear_bound_from(region_spectra(p, region, mult_tol, exec), mult_tol);
}

MbConstants mb_constants(const ReducedProblem& p, const Vec& minimiser, const Mat& solution_tangent,
                         double mult_tol) {
  const ReducedPoint rp = p.evaluate(minimiser, 2);
  const Eigen::Index n = rp.x.size();
  if (solution_tangent.rows() != n) throw Error(Errc::DimensionMismatch, "solution tangent has wrong row count");

  const double g = rp.grad_full.norm();
  if (g > 1e-8) throw Error(Errc::NotCritical, "gradient norm " + std::to_string(g) + " at the minimiser");

  const Mat t = solution_tangent.cols() > 0 ? orthonormal_basis(solution_tangent) : Mat(n, 0);

  // Morse-Bott: ker hess f == span(T)
  const EigenPairs full = sym_eig(SymMatrix(rp.hess_full));
  const double scale = std::max(1.0, full.values.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> kernel_idx;
  for (Eigen::Index i = 0; i < full.values.size(); ++i) {
    if (std::abs(full.values(i)) <= 1e-8 * scale) kernel_idx.push_back(i);
  }
  const Mat kernel = select_columns(full.vectors, kernel_idx);
  const bool same_dim = kernel.cols() == t.cols();
  const double misfit = kernel.cols() > 0 ? (kernel - t * (t.transpose() * kernel)).norm() : 0.0;
  if (!same_dim || misfit > 1e-6) {
    throw Error(Errc::KernelMismatch, "Hessian kernel has dimension " + std::to_string(kernel.cols()) +
                                          ", solution tangent has " + std::to_string(t.cols()));
  }

  MbConstants out;
  const Mat normal = orthogonal_complement(t);  // n x (n - d)
  const Mat restricted = normal.transpose() * rp.hess_full * normal;
  const EigenPairs hx = sym_eig(SymMatrix(restricted));
  out.mu_f = hx.values(0);
  const double top = std::max(1.0, hx.values.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> min_idx;
  double next = 0.0;
  bool has_next = false;
  for (Eigen::Index i = 0; i < hx.values.size(); ++i) {
    if (hx.values(i) - out.mu_f <= mult_tol * top) {
      min_idx.push_back(i);
    } else if (!has_next) {
      next = hx.values(i);
      has_next = true;
    }
  }
  out.multiplicity = static_cast<int>(min_idx.size());
  out.delta_min = has_next ? next - out.mu_f : 0.0;

  const Mat tangent_m = orthonormal_basis(rp.d_phi);
  out.eps_min = nontangency(tangent_m, normal * select_columns(hx.vectors, min_idx));
  out.bound = out.mu_f + improvement(out.delta_min, out.eps_min);
  out.tangent_contained = t.cols() == 0 || (t - tangent_m * (tangent_m.transpose() * t)).norm() <= 1e-8;

  // Tangent of S_F: directions y with DPhi y in span(T).
  const Mat off_tangent = rp.d_phi - t * (t.transpose() * rp.d_phi);
  const Mat tf = off_tangent.norm() <= 1e-10 * (1.0 + rp.d_phi.norm()) ? Mat(Mat::Identity(p.n1(), p.n1()))
                                                                       : null_space(off_tangent, 1e-8);
  // R-orthogonal complement of T S_F.
  const Mat nf = tf.cols() > 0 ? null_space(tf.transpose() * rp.metric, 1e-12) : Mat::Identity(p.n1(), p.n1());
  if (nf.cols() == 0) throw Error(Errc::KernelMismatch, "reduced solution set fills the whole reduced space");
  const Mat hn = nf.transpose() * rp.hess * nf;
  const Mat rn = nf.transpose() * rp.metric * nf;
  out.mu_F = gen_eig_extremes(SymMatrix(hn), SymMatrix(rn)).min;

  const Mat nf_e = orthogonal_complement(tf);
  out.mu_F_eucl = sym_eig(SymMatrix(Mat(nf_e.transpose() * rp.hess * nf_e))).values(0);

  out.holds = out.mu_F >= out.bound - 1e-8;
  return out;
}

double pl_constant_estimate(const Objective& obj, const Region& region,
                            const std::optional<ReductionMapping>& mapping) {
  const std::vector<Vec> pts = sample_region(region);
  double best = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  std::optional<ReducedProblem> reduced;
  if (mapping) reduced.emplace(obj, *mapping);

  for (const Vec& x : pts) {
    double gap = 0.0;
    double sq = 0.0;
    if (reduced) {
      const ReducedPoint rp = reduced->evaluate(x, 1);
      gap = rp.value - obj.known_min_value;
      if (gap <= 1e-14) continue;
      sq = rp.grad.dot(spd_solve(SymMatrix(rp.metric), rp.grad));
    } else {
      if (x.size() != obj.dim()) throw Error(Errc::DimensionMismatch, "region center must live in the full space");
      gap = obj.value(x) - obj.known_min_value;
      if (gap <= 1e-14) continue;
      sq = obj.gradient(x).squaredNorm();
    }
    best = std::min(best, sq / (2.0 * gap));
    ++used;
  }
  if (used == 0) throw Error(Errc::EmptySample, "every sample sits at the minimum value");
  return best;
}

CorrectionBound correction_bound(const ReducedProblem& p, const Vec& x1, double mult_tol) {
  const auto* implicit = std::get_if<ReductionMapping::ImplicitArgmin>(&p.mapping().kind());
  if (!implicit) throw Error(Errc::WrongMappingKind, "correction bound needs an implicit-argmin mapping");
  const InnerProblem& g = *implicit->inner;
  if (!g.has_third_derivatives()) throw Error(Errc::MissingThirdDerivatives, "inner problem lacks third derivatives");
  const double alpha = p.mapping().scale_alpha();

  const Vec u = p.mapping().inner_solution(x1);
  const ReducedPoint rp = p.evaluate(x1, 2);

  CorrectionBound b;
  b.sigma = sym_eig(SymMatrix(g.hess_uu(x1, u))).values(0);
  if (!(b.sigma > 0.0)) throw Error(Errc::SSOSCViolation, "inner Hessian is not positive definite");
  b.l12 = injective_norm_bound(g.d3_x1x1u(x1, u));
  b.l21 = injective_norm_bound(g.d3_x1uu(x1, u));
  b.l3 = injective_norm_bound(g.d3_uuu(x1, u));
  b.l11 = spectral_norm(g.hess_x1u(x1, u));
  b.l_tilde = b.sigma * b.l12 + b.l21 * b.l11 + b.l3 * b.l11 * b.l11 / b.sigma;
  b.l_tilde_corrected = b.l_tilde + b.l21 * b.l11;

  const Vec v = rp.grad_x2();
  b.l_f = rp.grad_full.norm();
  b.xi = b.l_f > 0.0 ? v.norm() / b.l_f : 0.0;
  const double d2_bound = alpha * b.l_tilde / (b.sigma * b.sigma);
  b.bound = d2_bound * b.xi * b.l_f;
  b.corrected_bound = alpha * b.l_tilde_corrected / (b.sigma * b.sigma) * b.xi * b.l_f;

  b.d2psi_norm = injective_norm_bound(rp.d2_psi);
  b.c_norm = max_abs(sym_eig(SymMatrix(rp.correction)).values);

  // D2Psi as a map Sym^2(R^{n1}) -> R^{n2} in an orthonormal basis of Sym^2.
  const Eigen::Index n1 = p.n1();
  const Eigen::Index n2 = p.n2();
  Mat flat(n2, n1 * (n1 + 1) / 2);
  for (Eigen::Index k = 0; k < n2; ++k) {
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < n1; ++i) {
      for (Eigen::Index j = i; j < n1; ++j) {
        flat(k, c++) = (i == j ? 1.0 : std::sqrt(2.0)) * rp.d2_psi(k, i, j);
      }
    }
  }
  b.cos_theta = 1.0;
  if (v.norm() > 0.0 && flat.norm() > 0.0) {
    Eigen::JacobiSVD<Mat> svd(flat, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    Eigen::Index top = 0;
    while (top < s.size() && s(top) >= (1.0 - mult_tol) * s(0)) ++top;
    b.cos_theta = (svd.matrixU().leftCols(top).transpose() * v).norm() / v.norm();
  }
  b.refined_bound = d2_bound * v.norm() * b.cos_theta;

  const auto le = [](double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-10) + 1e-14; };
  b.holds = le(b.c_norm, b.bound);
  b.refined_holds = le(b.c_norm, b.refined_bound);
  b.d2psi_holds = le(b.d2psi_norm, d2_bound);
  b.corrected_holds = le(b.c_norm, b.corrected_bound);
  return b;
}

const std::vector<std::string>& spectral_report_fields() {
  static const std::vector<std::string> fields = {
      "beta_f",         "beta_F_riem",           "beta_F_eucl",     "epsilon",
      "multiplicity_p", "delta_max",             "delta_min",       "mu_f",
      "mu_F",           "kappa_f",               "kappa_F",         "M_phi",
      "m_phi",          "Q",                     "Z",               "correction_norm",
      "bound_affine_holds", "bound_nonlinear_holds", "bound_mb_holds", "star_condition_holds",
      "nonlinear_hypothesis_failed", "gap_vacuous"};
  return fields;
}

SpectralReport condition_report(const ReducedProblem& p, const Region& region, const std::optional<Vec>& minimiser,
                                const Mat& solution_tangent, double mult_tol, Exec exec) {
  const RegionSpectra s = region_spectra(p, region, mult_tol, exec);
  SpectralReport r;
  r.beta_f = s.beta_f;
  r.beta_F_riem = s.beta_F_riem;
  r.beta_F_eucl = s.beta_F_eucl;
  r.epsilon = s.epsilon;
  r.multiplicity_p = s.multiplicity;
  r.delta_max = s.delta_max;
  r.M_phi = s.M_phi;
  r.m_phi = s.m_phi;
  r.Q = s.q;
  r.Z = s.z;
  r.correction_norm = s.correction_norm;

  if (p.mapping().is_affine()) r.bound_affine_holds = affine_bound_from(s, mult_tol).holds;
  const NonlinearBound nb = nonlinear_bound_from(s, mult_tol);
  r.bound_nonlinear_holds = nb.holds;
  r.nonlinear_hypothesis_failed = nb.hypothesis_failed;
  r.gap_vacuous = nb.vacuous;
  r.star_condition_holds = improvement(s.delta_max, s.epsilon) > 0.5 * s.beta_f;

  if (minimiser) {
    const MbConstants mb = mb_constants(p, *minimiser, solution_tangent, mult_tol);
    r.mu_f = mb.mu_f;
    r.mu_F = mb.mu_F;
    r.delta_min = mb.delta_min;
    r.bound_mb_holds = mb.holds;
    if (mb.mu_f > 0.0) r.kappa_f = s.beta_f / mb.mu_f;
    if (mb.mu_F > 0.0) r.kappa_F = s.beta_F_riem / mb.mu_F;
  }
  return r;
}

nlohmann::ordered_json to_json(const SpectralReport& r) {
  const auto opt = [](const auto& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["beta_f"] = r.beta_f;
  j["beta_F_riem"] = r.beta_F_riem;
  j["beta_F_eucl"] = r.beta_F_eucl;
  j["epsilon"] = r.epsilon;
  j["multiplicity_p"] = r.multiplicity_p;
  j["delta_max"] = r.delta_max;
  j["delta_min"] = opt(r.delta_min);
  j["mu_f"] = opt(r.mu_f);
  j["mu_F"] = opt(r.mu_F);
  j["kappa_f"] = opt(r.kappa_f);
  j["kappa_F"] = opt(r.kappa_F);
  j["M_phi"] = r.M_phi;
  j["m_phi"] = r.m_phi;
  j["Q"] = r.Q;
  j["Z"] = r.Z;
  j["correction_norm"] = r.correction_norm;
  j["bound_affine_holds"] = opt(r.bound_affine_holds);
  j["bound_nonlinear_holds"] = r.bound_nonlinear_holds;
  j["bound_mb_holds"] = opt(r.bound_mb_holds);
  j["star_condition_holds"] = r.star_condition_holds;
  j["nonlinear_hypothesis_failed"] = r.nonlinear_hypothesis_failed;
  j["gap_vacuous"] = r.gap_vacuous;
  return j;
}

}  // namespace redmap
