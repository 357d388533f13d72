#include <vector>
#include <string>

#include "pllsync/cli.hpp"

int main(int argc, char** argv) {
  return pllsync::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
