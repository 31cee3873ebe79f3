#include "imrnn/cli.hpp"
int main(int argc, char** argv) { return imrnn::cli::run(argc, argv); }
