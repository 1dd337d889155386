#include <iostream>
#include <string>
#include <vector>

#include "segflow/commands.h"

int main(int argc, char** argv) {
  return segflow::RunCli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
