#pragma once
namespace latsch { int run_cli(int argc, char** argv); }
