#ifndef MOLFRAG_ERROR_HPP
#define MOLFRAG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace molfrag {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// SMILES text that does not parse.
class SyntaxError : public Error {
 public:
  explicit SyntaxError(const std::string& msg) : Error(msg) {}
};

// An atom carries more bonds than its element and charge allow.
class ValenceError : public Error {
 public:
  explicit ValenceError(const std::string& msg) : Error(msg) {}
};

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(const std::string& msg) : Error(msg) {}
};

// decompose() met an atom whose single-atom fragment is not in the vocabulary.
class OutOfVocabularyAtom : public Error {
 public:
  explicit OutOfVocabularyAtom(const std::string& msg) : Error(msg) {}
};

class LengthMismatch : public Error {
 public:
  explicit LengthMismatch(const std::string& msg) : Error(msg) {}
};

class ZeroVector : public Error {
 public:
  explicit ZeroVector(const std::string& msg) : Error(msg) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

// Correlation over a matrix whose entries are all equal is undefined.
class ConstantMatrix : public Error {
 public:
  explicit ConstantMatrix(const std::string& msg) : Error(msg) {}
};

class ZeroColumn : public Error {
 public:
  explicit ZeroColumn(const std::string& msg) : Error(msg) {}
};

// Property kind outside the quantization table.
class UnsupportedKind : public Error {
 public:
  explicit UnsupportedKind(const std::string& msg) : Error(msg) {}
};

// Property kind outside the validity-range table.
class UnknownKind : public Error {
 public:
  explicit UnknownKind(const std::string& msg) : Error(msg) {}
};

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(const std::string& msg) : Error(msg) {}
};

class UnknownTask : public Error {
 public:
  explicit UnknownTask(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace molfrag

#endif
