#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace maskscope {

// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::uint8_t> bytes);
    Sha256& update(std::string_view text);
    // Streams the file contents; throws DataError if unreadable.
    Sha256& update_file(const std::filesystem::path& path);
    // Finalizes; the object must not be updated afterwards.
    std::string hex();

private:
    struct State;
    std::unique_ptr<State> state_;
};

std::string base64(std::span<const std::uint8_t> bytes);

}  // namespace maskscope
