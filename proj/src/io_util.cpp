#include "etpa/io_util.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "etpa/errors.hpp"

namespace etpa::io {

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{})
        throw std::runtime_error("format_double: conversion failed");
    return {buf, end};
}

double parse_double(std::string_view token, std::string_view context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw MalformedFileError(std::string(context) + ": cannot parse '" + std::string(token) +
                                 "' as a number");
    return value;
}

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer) {
    auto tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error("cannot open " + tmp.string() + " for writing");
            writer(out);
            out.flush();
            if (!out)
                throw std::runtime_error("write to " + tmp.string() + " failed");
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw;
    }
}

} // namespace etpa::io
