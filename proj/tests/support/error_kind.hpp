#pragma once

#include <gtest/gtest.h>

#include "fef/error.hpp"

// Runs f and returns the kind of the fef::Error it throws.
template <class F>
fef::ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const fef::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no fef::Error thrown";
  return fef::ErrorKind::ConfigError;
}
