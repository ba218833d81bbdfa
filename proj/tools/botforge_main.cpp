#include "botforge/cli.hpp"

int main(int argc, char** argv) { return botforge::cli::run(argc, argv); }
