#pragma once

#include <stdexcept>
#include <string>

namespace flowpix {

enum class ErrorKind {
    schema_empty,
    malformed_cell,
    malformed_record,
    layout_overflow,
    stale_manifest,
    format,
    ambiguous_decode,
    degenerate_task,
    invalid_argument,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace flowpix
