#pragma once

#include <stdexcept>
#include <string>

namespace mcpshield::protocol {

// Transport/envelope faults surface as exceptions; policy outcomes never do.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

class FramingError : public ProtocolError {
 public:
  explicit FramingError(const std::string& what) : ProtocolError(what) {}
};

class TransportError : public ProtocolError {
 public:
  explicit TransportError(const std::string& what) : ProtocolError(what) {}
};

class TimeoutError : public TransportError {
 public:
  explicit TimeoutError(const std::string& what) : TransportError(what) {}
};

}  // namespace mcpshield::protocol
