#pragma once

#include "rydgate/core.hpp"
#include "rydgate/pulse.hpp"
#include "rydgate/hamiltonian.hpp"
#include "rydgate/model.hpp"
#include "rydgate/propagation.hpp"
#include "rydgate/protocols.hpp"
#include "rydgate/metrics.hpp"
#include "rydgate/config.hpp"
#include "rydgate/sweep.hpp"
