#include "pfchain/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pfchain::main_entry(args, std::cout, std::cerr);
}
