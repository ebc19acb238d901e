//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#include "phdiff/cli.hpp"

int main(int argc, char **argv) { return phdiff::cli::run(argc, argv); }
