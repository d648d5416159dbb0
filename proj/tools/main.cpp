#include "fic_teleop/cli.hpp"

int main(int argc, char** argv) {
  return fic_teleop::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
