#include <iostream>
#include <string>
#include <vector>

#include "percoldp/lab.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return percoldp::lab::run(args, std::cout, std::cerr);
}
