#pragma once

#include "relaypower/asymptotic.hpp"
#include "relaypower/channel.hpp"
#include "relaypower/experiment.hpp"
#include "relaypower/global_allocator.hpp"
#include "relaypower/link_metrics.hpp"
#include "relaypower/relay_allocator.hpp"
