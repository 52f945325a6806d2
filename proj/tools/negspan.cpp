#include <string>
#include <vector>

#include "negspan/cli.hpp"

int main(int argc, char** argv) {
  return negspan::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
