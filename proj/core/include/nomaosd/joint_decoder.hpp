#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nomaosd/channel.hpp"
#include "nomaosd/gf2.hpp"

namespace nomaosd {

struct JdConfig {
    const LinearCode* code = nullptr;
    UserChannel ch;
    std::uint32_t order = 3;
    int t_off = -1;          // PIC-only iterations; -1 = n_users (simple switch)
    int t_max = 10;
    double beta = 1.0;       // decision statistics combiner weight, 1 = off
    double gamma = 1.0;      // decoding combiner weight, 1 = off
    bool run_all_iterations = false;  // ignore the convergence stop (tracing)

    int effective_t_off() const { return t_off < 0 ? static_cast<int>(ch.n_users()) : t_off; }
    void validate() const;
};

struct JdUserIteration {
    std::vector<double> llr;        // PIC output, code order
    std::vector<double> extrinsic;  // decoder output, code order (decoding iterations only)
    std::vector<double> feedback;   // epsilon, channel order
    BitVec decision;                // code order
};

struct JdIteration {
    std::vector<JdUserIteration> user;
};

struct JdTrace {
    std::vector<JdIteration> iterations;   // index t-1
    std::optional<int> converged_at;
    bool decoded = false;                  // reached a decoding iteration
};

// One interference-cancellation pass over all users; eps_prev in channel order.
std::vector<std::vector<double>> pic_step(std::span<const double> r,
                                          const std::vector<std::vector<double>>& eps_prev,
                                          const UserChannel& ch);

// tanh-domain blend: tanh(out) = beta*tanh(cur) + (1-beta)*tanh(prev)
std::vector<double> dsc_combine(std::span<const double> cur, std::span<const double> prev,
                                double beta);
std::vector<double> dc_combine(std::span<const double> extrinsic, std::span<const double> llr,
                               double gamma);

JdTrace jd_decode(const ReceivedBlock& block, const JdConfig& cfg);

}  // namespace nomaosd
