#pragma once

#include "hitchhike/analysis.hpp"
#include "hitchhike/campaign.hpp"
#include "hitchhike/constellation.hpp"
#include "hitchhike/discovery.hpp"
#include "hitchhike/obstruction.hpp"
#include "hitchhike/probe.hpp"
#include "hitchhike/raw_transport.hpp"
#include "hitchhike/simnet.hpp"
#include "hitchhike/store.hpp"
