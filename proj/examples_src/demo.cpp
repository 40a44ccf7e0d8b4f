// Prints the partial density of the model and a perturbed potential across
// the transition at x = eps, next to the error-function law.

#include <cstdio>

#include "pbk/asymptotics.hpp"
#include "pbk/disc_pbk.hpp"
#include "pbk/gram_oracle.hpp"
#include "pbk/model_exact.hpp"

int main() {
  const int k = 200;
  const double eps = 0.25;
  for (const char* spec : {"model", "perturbed:0.1"}) {
    pbk::DualPotential d(pbk::parse_potential(spec));
    pbk::LocalKernel local(d, pbk::PbkConfig::make(d.a(), k, eps));
    pbk::GramOracle oracle(d, k, eps, pbk::default_n_max(d.a(), k));
    std::printf("%s (a = %.3f), k = %d, eps = %.2f\n", spec, d.a(), k, eps);
    std::printf("%8s %14s %14s %14s\n", "x", "oracle/k", "local/k", "leading");
    for (double x = 0.15; x <= 0.351; x += 0.025) {
      std::printf("%8.3f %14.6e %14.6e %14.6e\n", x, oracle.pdf(x) / k, local.pdf(x) / k,
                  pbk::asym::pdf_leading(d, eps, k, x));
    }
    std::printf("\n");
  }
  std::printf("model closed form at x = eps: %.12f\n", pbk::model_pdf({k, eps, eps}));
}
