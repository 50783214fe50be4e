#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "chainctl/cli.hpp"

int main(int argc, char** argv) {
  try {
    return chainctl::cli::dispatch({argv + 1, argv + argc});
  } catch (const std::exception& e) {
    std::cerr << "error: fatal: " << e.what() << "\n";
    return 3;
  }
}
