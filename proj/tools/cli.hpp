#pragma once
#include <string>
#include <vector>
namespace vitalspec::cli { int run(int argc, char** argv); }
