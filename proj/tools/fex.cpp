#include <exception>
#include <iostream>

#include "fex/cli.hpp"

int main(int argc, char** argv) {
  try {
    return fex::cli::main_entry(argc, argv, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "fex: " << e.what() << "\n";
    return fex::cli::kInputError;
  }
}
