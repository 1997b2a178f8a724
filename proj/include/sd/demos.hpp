#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace sd {

struct DemoReport {
    bool pass = false;
    std::string text;
    nlohmann::json details;
};

DemoReport demo_otp(const std::string& data_dir, double eps = 1e-12);
DemoReport demo_newcomb(const std::string& data_dir, double eps = 1e-9);
DemoReport demo_xor(const std::string& data_dir, double eps = 1e-12);
DemoReport demo_race(const std::string& data_dir, double eps = 1e-12);
DemoReport demo_mascarpone(const std::string& data_dir);

} // namespace sd
