#pragma once

#include "piezoamp/error.hpp"
#include "piezoamp/material.hpp"
#include "piezoamp/design.hpp"
#include "piezoamp/orfd.hpp"
#include "piezoamp/spectrum.hpp"
#include "piezoamp/simulation.hpp"
#include "piezoamp/io.hpp"
