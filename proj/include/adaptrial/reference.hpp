#pragma once

#include <span>
#include <string_view>

// Published values the reproduce-table command compares against.
namespace adaptrial::reference {

struct AllocationRow {
    double difference;
    double sd;
    int budget;
    double sqrt_ratio_mean_nA;
    double normal_cdf_mean_nB;
};

struct SensitivityPoint {
    double delta;
    double omega;
    double prop_A;
    double switch_point;
};

struct StopCell {
    double c_B;
    double omega;
    double delta;
    double beta;
    double q025;
    double median;
    double q975;
    double p_exhaust;
    std::string_view note;  // empty unless the printed row label was corrected
};

std::span<const AllocationRow> allocation_table();   // table 2
std::span<const SensitivityPoint> sensitivity();      // c_B = 1e-6, beta = 1
std::span<const StopCell> stopping_table(int id);     // 3, 4 or 5; empty otherwise

}  // namespace adaptrial::reference
