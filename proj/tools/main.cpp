#include "splatforge/cli/pipeline.hpp"

int main(int argc, char** argv) { return splatforge::run_cli(argc, argv); }
