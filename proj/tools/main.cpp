#include <string>
#include <vector>

#include "priorlens/harness.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return priorlens::cli_main(args);
}
