#include <iostream>
#include <string>
#include <vector>

#include "dsmalc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const dsmalc::cli::CommandResult r = dsmalc::cli::run(args, std::cerr);
  std::cout << r.payload.dump() << "\n";
  return r.exit_code;
}
