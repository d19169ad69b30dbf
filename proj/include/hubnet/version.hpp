#pragma once

#define HUBNET_VERSION "0.1.0"
