// Perfect and censored rankings of one five-candidate competition.

#include <cstdio>
#include <vector>

#include "fairsim/simgen.hpp"

int main() {
  const std::vector<double> xbar{-0.15, 0.36, -1.10, 0.28, -0.48};
  const std::vector<double> ybar{0.33, -0.52, 0.56, 0.32, -0.32};

  auto show = [](const char* label, const std::vector<int>& ranks) {
    std::printf("%-12s", label);
    for (int r : ranks) std::printf(" %d", r);
    std::printf("\n");
  };
  show("perfect", fairsim::perfect_ranking(xbar));
  for (double s : {-0.5, 0.0, 0.5, 1.0}) {
    char label[32];
    std::snprintf(label, sizeof label, "S = %+.1f", s);
    show(label, fairsim::censored_ranking(xbar, ybar, s));
  }
}
