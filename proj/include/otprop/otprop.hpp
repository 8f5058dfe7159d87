#pragma once

// Everything except the JSON and scenario layers.

#include "otprop/ambiguity.hpp"
#include "otprop/drcvar.hpp"
#include "otprop/error.hpp"
#include "otprop/linalg.hpp"
#include "otprop/measures.hpp"
#include "otprop/point_map.hpp"
#include "otprop/qp.hpp"
#include "otprop/systems.hpp"
#include "otprop/transport.hpp"
