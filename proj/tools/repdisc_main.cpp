#include <string>
#include <vector>

#include "repdisc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return repdisc::cli::run(args);
}
