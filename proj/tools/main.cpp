#include "uwbrtls/cli.hpp"

int main(int argc, char** argv) { return uwb::cli::run(argc, argv); }
