#include <pybind11/pybind11.h>
PYBIND11_MODULE(_ucbeam, m) { m.doc() = "placeholder"; }
