#include "adaptrial/reference.hpp"

#include <array>

namespace adaptrial::reference {

namespace {

constexpr std::array<AllocationRow, 7> kAllocation{{
    {0, 20, 128, 63.542, 31.284},
    {10, 15, 74, 36.545, 6.038},
    {10, 20, 128, 63.690, 8.056},
    {10, 25, 200, 99.064, 10.833},
    {20, 20, 34, 16.641, 3.314},
    {20, 25, 52, 25.652, 3.900},
    {20, 30, 74, 36.479, 4.379},
}};

constexpr std::array<SensitivityPoint, 9> kSensitivity{{
    {1, 0.1, 0.603, 39.595},
    {1, 0.01, 0.595, 40.913},
    {1, 0.001, 0.538, 46.702},
    {3, 0.1, 0.793, 18.217},
    {3, 0.01, 0.751, 24.694},
    {3, 0.001, 0.609, 39.499},
    {5, 0.1, 0.885, 8.159},
    {5, 0.01, 0.833, 15.453},
    {5, 0.001, 0.665, 33.482},
}};

constexpr std::array<StopCell, 27> kTable3{{
    {0.1, 0.1, 1, 1, 25, 48, 84, 0.002, ""},
    {0.1, 0.1, 2, 1, 22, 32, 51, 0.000, ""},
    {0.1, 0.1, 3, 1, 22, 28, 45.025, 0.001, ""},
    {0.1, 0.01, 1, 1, 47, 72, 100, 0.106, ""},
    {0.1, 0.01, 2, 1, 44, 55, 74, 0.000, ""},
    {0.1, 0.01, 3, 1, 48, 56, 69.025, 0.000, ""},
    {0.1, 0.001, 1, 1, 99, 100, 100, 0.974, ""},
    {0.1, 0.001, 2, 1, 100, 100, 100, 0.985, ""},
    {0.1, 0.001, 3, 1, 76, 90, 100, 0.166, ""},
    {0.001, 0.1, 1, 1, 27, 49, 86.025, 0.009, ""},
    {0.001, 0.1, 2, 1, 21, 31, 48, 0.000, ""},
    {0.001, 0.1, 3, 1, 23, 28, 46, 0.000, ""},
    {0.001, 0.01, 1, 1, 50, 73, 100, 0.105, ""},
    {0.001, 0.01, 2, 1, 46, 58, 75, 0.000, ""},
    {0.001, 0.01, 3, 1, 49, 57, 68.025, 0.000, ""},
    {0.001, 0.001, 1, 1, 100, 100, 100, 1.000, ""},
    {0.001, 0.001, 2, 1, 100, 100, 100, 1.000, ""},
    {0.001, 0.001, 3, 1, 98, 100, 100, 0.956, ""},
    {1e-6, 0.1, 1, 1, 26.975, 47, 87, 0.009, ""},
    {1e-6, 0.1, 2, 1, 23, 32, 52, 0.000, ""},
    {1e-6, 0.1, 3, 1, 22, 27.5, 43, 0.000, ""},
    {1e-6, 0.01, 1, 1, 50, 74, 100, 0.114, ""},
    {1e-6, 0.01, 2, 1, 47, 57, 76, 0.001, ""},
    {1e-6, 0.01, 3, 1, 49.975, 57, 69, 0.000, ""},
    {1e-6, 0.001, 1, 1, 100, 100, 100, 1.000, ""},
    {1e-6, 0.001, 2, 1, 100, 100, 100, 1.000, ""},
    {1e-6, 0.001, 3, 1, 99, 100, 100, 0.974, ""},
}};

// The first c_B = 0.001 row is printed with omega 0.001, which would duplicate the
// third row of that block; it is read as the omega = 0.1 row.
constexpr std::string_view kRelabel = "printed omega 0.001, read as 0.1";

constexpr std::array<StopCell, 18> kTable4{{
    {0.1, 0.1, 4, 1, 22, 29, 78.025, 0.010, ""},
    {0.1, 0.1, 5, 1, 25, 32, 100, 0.113, ""},
    {0.1, 0.01, 4, 1, 50, 61, 76, 0.001, ""},
    {0.1, 0.01, 5, 1, 45, 56, 85, 0.002, ""},
    {0.1, 0.001, 4, 1, 63, 75, 94, 0.011, ""},
    {0.1, 0.001, 5, 1, 57, 68, 87, 0.000, ""},
    {0.001, 0.1, 4, 1, 24, 28, 68.025, 0.006, kRelabel},
    {0.001, 0.1, 5, 1, 26, 31, 100, 0.074, kRelabel},
    {0.001, 0.01, 4, 1, 50, 60, 73, 0.000, ""},
    {0.001, 0.01, 5, 1, 46, 55, 73, 0.000, ""},
    {0.001, 0.001, 4, 1, 86, 94, 100, 0.203, ""},
    {0.001, 0.001, 5, 1, 78, 86, 99, 0.021, ""},
    {1e-6, 0.1, 4, 1, 23, 28, 73.025, 0.010, ""},
    {1e-6, 0.1, 5, 1, 25, 32, 100, 0.088, ""},
    {1e-6, 0.01, 4, 1, 49, 61, 76, 0.000, ""},
    {1e-6, 0.01, 5, 1, 45, 56, 76.025, 0.002, ""},
    {1e-6, 0.001, 4, 1, 85, 94, 100, 0.223, ""},
    {1e-6, 0.001, 5, 1, 79, 87, 100, 0.027, ""},
}};

constexpr std::array<StopCell, 6> kTable5{{
    {1e-6, 0.1, 1, 1, 27, 50, 86.025, 0.008, ""},
    {1e-6, 0.1, 1, 2, 26, 49, 88.025, 0.007, ""},
    {1e-6, 0.1, 3, 1, 23, 28, 43.025, 0.000, ""},
    {1e-6, 0.1, 3, 2, 21, 28, 44, 0.000, ""},
    {1e-6, 0.1, 5, 1, 26, 32, 100, 0.083, ""},
    {1e-6, 0.1, 5, 2, 26, 31, 100, 0.084, ""},
}};

}  // namespace

std::span<const AllocationRow> allocation_table() { return kAllocation; }
std::span<const SensitivityPoint> sensitivity() { return kSensitivity; }

std::span<const StopCell> stopping_table(int id)
{
    switch (id) {
    case 3: return kTable3;
    case 4: return kTable4;
    case 5: return kTable5;
    default: return {};
    }
}

}  // namespace adaptrial::reference
