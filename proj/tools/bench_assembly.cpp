// Benchmark of the OpenMP assembly and estimator kernels against their serial
// reference paths. The parallel kernels are deterministic, so besides timing
// the run also checks that both paths produce identical matrices.

#include <chrono>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "glb/afem.hpp"
#include "glb/crlaplace.hpp"
#include "glb/gevp.hpp"
#include "glb/mesh.hpp"
#include "glb/morley.hpp"

#ifdef GLB_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

double best_of(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-22s %10.2f ms %10.2f ms   x%-6.2f   max |diff| = %.3g\n", name.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

double sparse_diff(const glb::SpMat& a, const glb::SpMat& b) {
  glb::SpMat d = a - b;
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (glb::SpMat::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef GLB_HAVE_OPENMP
  if (const char* s = std::getenv("GLB_THREADS")) {
    int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
  CLI::App app{"serial vs parallel kernel benchmark"};
  std::string domain = "lshape";
  int levels = 9;
  int repeats = 3;
  app.add_option("--domain", domain, "builtin domain name");
  app.add_option("--levels", levels, "uniform refinements of the initial mesh");
  app.add_option("--repeats", repeats, "repetitions per kernel (best time wins)");
  CLI11_PARSE(app, argc, argv);

  glb::Triangulation2D mesh = glb::build_domain(domain);
  for (int l = 0; l < levels; ++l) mesh = glb::refine_uniform(mesh);
  auto dm = glb::morley_dofs(mesh);
  auto cr = glb::cr_dofs(mesh);
  std::cout << "domain " << domain << ", " << mesh.nt() << " triangles, " << dm.ndof
            << " Morley dofs, " << cr.ndof << " CR dofs";
#ifdef GLB_HAVE_OPENMP
  std::cout << ", " << omp_get_max_threads() << " threads";
#endif
  std::cout << "\n\n";

  glb::MorleyPencil ms, mp;
  double t_ms = best_of(repeats, [&] { ms = glb::assemble_morley_pencil(mesh, dm, false); });
  double t_mp = best_of(repeats, [&] { mp = glb::assemble_morley_pencil(mesh, dm, true); });
  report("morley pencil", t_ms, t_mp,
         std::max(sparse_diff(ms.K, mp.K), sparse_diff(ms.M, mp.M)));

  glb::CRPencil cs, cp;
  double t_cs = best_of(repeats, [&] { cs = glb::assemble_cr_pencil(mesh, cr, false); });
  double t_cp = best_of(repeats, [&] { cp = glb::assemble_cr_pencil(mesh, cr, true); });
  report("cr pencil", t_cs, t_cp, std::max(sparse_diff(cs.K, cp.K), sparse_diff(cs.M, cp.M)));

  double lambda = 100.0;
  glb::SpMat ws, wp;
  double t_ws = best_of(repeats,
                        [&] { ws = glb::assemble_weighted_morley_mass(mesh, dm, lambda, false); });
  double t_wp = best_of(repeats,
                        [&] { wp = glb::assemble_weighted_morley_mass(mesh, dm, lambda, true); });
  report("weighted mass", t_ws, t_wp, sparse_diff(ws, wp));

  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(dm.ndof, 0.1, 1.0);
  glb::EstimatorOptions es, ep;
  es.parallel = false;
  ep.parallel = true;
  glb::EstimatorField fs, fp;
  double t_es = best_of(repeats, [&] { fs = glb::estimator(mesh, dm, lambda, x, es); });
  double t_ep = best_of(repeats, [&] { fp = glb::estimator(mesh, dm, lambda, x, ep); });
  report("estimator", t_es, t_ep, (fs.eta_sq - fp.eta_sq).cwiseAbs().maxCoeff());

  return 0;
}
