#include <locale>

#include "gbsim/cli.hpp"

int main(int argc, char** argv) {
  // Output formats promise '.' decimal separators regardless of the host.
  std::locale::global(std::locale::classic());
  return gbsim::run_cli(argc, argv);
}
