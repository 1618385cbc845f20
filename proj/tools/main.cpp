#include "daeops/cli.hpp"

int main(int argc, char** argv) { return daeops::cli::run(argc, argv); }
