#pragma once

#include <stdexcept>
#include <string>

namespace visca {

// Base of every error raised by the pipeline. The category decides the
// process exit code reported by the CLI.
class Error : public std::runtime_error {
public:
    enum class Category { input, provider, internal };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(Category::input, what) {}
};

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what) : Error(Category::provider, what) {}
};

class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(Category::internal, what) {}
};

// page-snapshot
class BundleIncomplete : public InputError {
public:
    explicit BundleIncomplete(const std::string& what) : InputError("BundleIncomplete: " + what) {}
};

class BundleInvalid : public InputError {
public:
    BundleInvalid(std::string field_path, const std::string& what)
        : InputError("BundleInvalid at " + field_path + ": " + what), field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

class NotRenderable : public InputError {
public:
    explicit NotRenderable(const std::string& what) : InputError("NotRenderable: " + what) {}
};

// visual-prune
class GeometryError : public InputError {
public:
    explicit GeometryError(const std::string& what) : InputError("GeometryError: " + what) {}
};

// llm-gateway
class ProviderAuthError : public ProviderError {
public:
    explicit ProviderAuthError(const std::string& what) : ProviderError("ProviderAuthError: " + what) {}
};

class ProviderUnavailable : public ProviderError {
public:
    explicit ProviderUnavailable(const std::string& what) : ProviderError("ProviderUnavailable: " + what) {}
};

class ProviderProtocolError : public ProviderError {
public:
    explicit ProviderProtocolError(const std::string& what)
        : ProviderError("ProviderProtocolError: " + what) {}
};

// classify-describe
class ClassificationError : public ProviderError {
public:
    explicit ClassificationError(const std::string& what) : ProviderError("ClassificationError: " + what) {}
};

// evaluator
class InvalidSegmentation : public InputError {
public:
    explicit InvalidSegmentation(const std::string& what) : InputError("InvalidSegmentation: " + what) {}
};

class ElementMismatch : public InputError {
public:
    explicit ElementMismatch(const std::string& what) : InputError("ElementMismatch: " + what) {}
};

}  // namespace visca
