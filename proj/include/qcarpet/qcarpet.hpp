#pragma once

#include "qcarpet/carpet.hpp"
#include "qcarpet/classical.hpp"
#include "qcarpet/errors.hpp"
#include "qcarpet/interference.hpp"
#include "qcarpet/numerov.hpp"
#include "qcarpet/packet.hpp"
#include "qcarpet/revival.hpp"
#include "qcarpet/spectrum.hpp"
