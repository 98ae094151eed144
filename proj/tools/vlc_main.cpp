#include "vlc/harness.hpp"

int main(int argc, char** argv) { return vlc::cli_main(argc, argv); }
