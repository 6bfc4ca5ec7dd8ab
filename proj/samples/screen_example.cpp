// Screens one simulated instance of the censored design and prints the top
// of the ranking for the weighted, local and naive variants.

#include <cstdio>

#include "qasis/evaluation.hpp"
#include "qasis/screening.hpp"
#include "qasis/simgen.hpp"

int main() {
  const auto inst = qasis::generate(qasis::ExampleId::e4, 2024);
  std::size_t events = 0;
  for (const auto& s : inst.censored) events += s.delta;
  std::printf("n=%zu p=%zu censored fraction %.2f\n", static_cast<std::size_t>(inst.X.rows()),
              static_cast<std::size_t>(inst.X.cols()),
              1.0 - static_cast<double>(events) / static_cast<double>(inst.censored.size()));

  for (auto method : {qasis::Method::qasis_censored, qasis::Method::qasis_local, qasis::Method::naive}) {
    qasis::ScreeningConfig config;
    config.method = method;
    config.alpha = 0.25;
    config.threads = 4;
    const auto result = qasis::screen(inst.X, inst.censored, config);
    const auto eval = qasis::evaluate_screen(result, inst.active.at(config.alpha));
    std::printf("%-15s R=%4zu S=%.2f top:", qasis::to_string(method), eval.R, eval.S);
    for (std::size_t k = 0; k < 6; ++k) std::printf(" X%zu", result.ranking[k] + 1);
    std::printf("\n");
  }
}
