#include "opx/cli/app.hpp"

int main(int argc, char** argv) { return opx::cli::run(argc, argv); }
