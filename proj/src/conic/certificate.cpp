#include <cmath>
#include <sstream>

#include "dr2s/conic.hpp"

namespace dr2s {

namespace {

std::string fmt(const char* what, double v) {
  std::ostringstream os;
  os << what << " " << v;
  return os.str();
}

}  // namespace

CertificateReport check_strong_duality(const ConeProgram& p, const ConicSolution& sol, double tol) {
  CertificateReport rep;
  const int n = p.num_vars();
  const Eigen::VectorXd& x = sol.x;
  const ConicDuals& d = sol.duals;
  // A numerical failure still carries an iterate; the residuals decide.
  if (sol.status == ConicStatus::infeasible || sol.status == ConicStatus::unbounded || x.size() != n) {
    rep.findings.push_back(std::string("status ") + to_string(sol.status));
    return rep;
  }

  // primal: rows, box, cones
  double pr = 0.0, comp = 0.0;
  Eigen::VectorXd gx = p.G * x;
  for (int i = 0; i < p.num_linear(); ++i) {
    const double slack = gx[i] - p.h[i];
    pr = std::max(pr, -slack / std::max(1.0, std::fabs(p.h[i])));
    comp += std::fabs(d.linear[i] * slack);
  }
  if (p.E.rows() > 0) {
    Eigen::VectorXd ex = p.E * x - p.e;
    for (int i = 0; i < ex.size(); ++i) pr = std::max(pr, std::fabs(ex[i]) / std::max(1.0, std::fabs(p.e[i])));
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(p.lo[j])) {
      pr = std::max(pr, (p.lo[j] - x[j]) / std::max(1.0, std::fabs(p.lo[j])));
      comp += std::fabs(d.tauL[j] * (x[j] - p.lo[j]));
    }
    if (std::isfinite(p.hi[j])) {
      pr = std::max(pr, (x[j] - p.hi[j]) / std::max(1.0, std::fabs(p.hi[j])));
      comp += std::fabs(d.tauU[j] * (p.hi[j] - x[j]));
    }
  }
  for (std::size_t i = 0; i < p.soc.size(); ++i) {
    const SocRow& s = p.soc[i];
    Eigen::VectorXd u = s.A * x + s.b;
    const double t = s.g.dot(x) + s.d;
    pr = std::max(pr, (u.norm() - t) / std::max(1.0, std::fabs(s.d)));
    comp += std::fabs(d.soc[i].lambda * t - d.soc[i].theta.dot(u));
  }
  rep.primal_residual = std::max(pr, 0.0);

  // dual: stationarity and cone membership
  Eigen::VectorXd r = p.objective - p.G.transpose() * d.linear - d.tauL + d.tauU;
  if (p.E.rows() > 0) r -= p.E.transpose() * d.equality;
  for (std::size_t i = 0; i < p.soc.size(); ++i) {
    r -= p.soc[i].g * d.soc[i].lambda;
    r += p.soc[i].A.transpose() * d.soc[i].theta;
  }
  rep.dual_residual = r.size() ? r.cwiseAbs().maxCoeff() / std::max(1.0, p.objective.cwiseAbs().maxCoeff()) : 0.0;
  double cr = 0.0;
  for (int i = 0; i < d.linear.size(); ++i) cr = std::max(cr, -d.linear[i]);
  for (int j = 0; j < n; ++j) cr = std::max({cr, -d.tauL[j], -d.tauU[j]});
  for (const auto& s : d.soc) cr = std::max(cr, s.theta.norm() - s.lambda);
  rep.cone_residual = cr;

  const double dual = dual_objective(p, d);
  const double primal = p.eval_objective(x);
  const double scale = std::max(1.0, std::fabs(primal));
  rep.gap = std::fabs(primal - dual) / scale;
  rep.complementarity = comp / scale;

  if (rep.primal_residual > tol) rep.findings.push_back(fmt("primal feasibility", rep.primal_residual));
  if (rep.dual_residual > tol) rep.findings.push_back(fmt("dual feasibility", rep.dual_residual));
  if (rep.cone_residual > tol) rep.findings.push_back(fmt("dual feasibility (cone)", rep.cone_residual));
  if (rep.complementarity > tol) rep.findings.push_back(fmt("complementarity", rep.complementarity));
  if (rep.gap > tol) rep.findings.push_back(fmt("duality gap", rep.gap));
  rep.passed = rep.findings.empty();
  return rep;
}

}  // namespace dr2s
