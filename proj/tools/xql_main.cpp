#include <string>
#include <vector>

#include "xql/result_io.hpp"

int main(int argc, char** argv) {
  return xql::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
