#include "attn_spectra/cli.hpp"

int main(int argc, char** argv) { return attn_spectra::cli::main(argc, argv); }
