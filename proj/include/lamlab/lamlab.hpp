#pragma once

#include "lamlab/ccdiag.hpp"
#include "lamlab/core.hpp"
#include "lamlab/entropy.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"
#include "lamlab/spectral.hpp"
#include "lamlab/verify.hpp"
