#ifndef EXPH_EXPH_HPP
#define EXPH_EXPH_HPP

// Umbrella header: the full horizontal exponential-energy toolkit.

#include "core.hpp"
#include "stencil.hpp"
#include "frame.hpp"
#include "target.hpp"
#include "fields.hpp"
#include "calculus.hpp"
#include "variational.hpp"
#include "flow.hpp"
#include "stability.hpp"
#include "io.hpp"
#include "runner.hpp"

#endif  // EXPH_EXPH_HPP
