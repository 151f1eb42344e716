#include <string>
#include <vector>

#include "scengen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return scengen::cli::run(args);
}
