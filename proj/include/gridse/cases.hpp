#pragma once

#include <string_view>

#include "gridse/matpower.hpp"

namespace gridse::cases {

// WSCC 9-bus test system.
inline constexpr std::string_view ieee9 = R"(
function mpc = case9
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	345	1	1.1	0.9;
	2	2	0	0	0	0	1	1	0	345	1	1.1	0.9;
	3	2	0	0	0	0	1	1	0	345	1	1.1	0.9;
	4	1	0	0	0	0	1	1	0	345	1	1.1	0.9;
	5	1	90	30	0	0	1	1	0	345	1	1.1	0.9;
	6	1	0	0	0	0	1	1	0	345	1	1.1	0.9;
	7	1	100	35	0	0	1	1	0	345	1	1.1	0.9;
	8	1	0	0	0	0	1	1	0	345	1	1.1	0.9;
	9	1	125	50	0	0	1	1	0	345	1	1.1	0.9;
];

%% generator data
%	bus	Pg	Qg	Qmax	Qmin	Vg	mBase	status	Pmax	Pmin
mpc.gen = [
	1	0	0	300	-300	1	100	1	250	10;
	2	163	0	300	-300	1	100	1	300	10;
	3	85	0	300	-300	1	100	1	270	10;
];

%% branch data
%	fbus	tbus	r	x	b	rateA	rateB	rateC	ratio	angle	status	angmin	angmax
mpc.branch = [
	1	4	0	0.0576	0	250	250	250	0	0	1	-360	360;
	4	5	0.017	0.092	0.158	250	250	250	0	0	1	-360	360;
	5	6	0.039	0.17	0.358	150	150	150	0	0	1	-360	360;
	3	6	0	0.0586	0	300	300	300	0	0	1	-360	360;
	6	7	0.0119	0.1008	0.209	150	150	150	0	0	1	-360	360;
	7	8	0.0085	0.072	0.149	250	250	250	0	0	1	-360	360;
	8	2	0	0.0625	0	250	250	250	0	0	1	-360	360;
	8	9	0.032	0.161	0.306	250	250	250	0	0	1	-360	360;
	9	4	0.01	0.085	0.176	250	250	250	0	0	1	-360	360;
];
)";

// IEEE 14-bus test system.
inline constexpr std::string_view ieee14 = R"(
function mpc = case14
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
mpc.bus = [
	1	3	0	0	0	0	1	1.06	0	0	1	1.06	0.94;
	2	2	21.7	12.7	0	0	1	1.045	-4.98	0	1	1.06	0.94;
	3	2	94.2	19	0	0	1	1.01	-12.72	0	1	1.06	0.94;
	4	1	47.8	-3.9	0	0	1	1.019	-10.33	0	1	1.06	0.94;
	5	1	7.6	1.6	0	0	1	1.02	-8.78	0	1	1.06	0.94;
	6	2	11.2	7.5	0	0	1	1.07	-14.22	0	1	1.06	0.94;
	7	1	0	0	0	0	1	1.062	-13.37	0	1	1.06	0.94;
	8	2	0	0	0	0	1	1.09	-13.36	0	1	1.06	0.94;
	9	1	29.5	16.6	0	19	1	1.056	-14.94	0	1	1.06	0.94;
	10	1	9	5.8	0	0	1	1.051	-15.1	0	1	1.06	0.94;
	11	1	3.5	1.8	0	0	1	1.057	-14.79	0	1	1.06	0.94;
	12	1	6.1	1.6	0	0	1	1.055	-15.07	0	1	1.06	0.94;
	13	1	13.5	5.8	0	0	1	1.05	-15.16	0	1	1.06	0.94;
	14	1	14.9	5	0	0	1	1.036	-16.04	0	1	1.06	0.94;
];

%% generator data
mpc.gen = [
	1	232.4	-16.9	10	0	1.06	100	1	332.4	0;
	2	40	42.4	50	-40	1.045	100	1	140	0;
	3	0	23.4	40	0	1.01	100	1	100	0;
	6	0	12.2	24	-6	1.07	100	1	100	0;
	8	0	17.4	24	-6	1.09	100	1	100	0;
];

%% branch data
mpc.branch = [
	1	2	0.01938	0.05917	0.0528	0	0	0	0	0	1	-360	360;
	1	5	0.05403	0.22304	0.0492	0	0	0	0	0	1	-360	360;
	2	3	0.04699	0.19797	0.0438	0	0	0	0	0	1	-360	360;
	2	4	0.05811	0.17632	0.034	0	0	0	0	0	1	-360	360;
	2	5	0.05695	0.17388	0.0346	0	0	0	0	0	1	-360	360;
	3	4	0.06701	0.17103	0.0128	0	0	0	0	0	1	-360	360;
	4	5	0.01335	0.04211	0	0	0	0	0	0	1	-360	360;
	4	7	0	0.20912	0	0	0	0	0.978	0	1	-360	360;
	4	9	0	0.55618	0	0	0	0	0.969	0	1	-360	360;
	5	6	0	0.25202	0	0	0	0	0.932	0	1	-360	360;
	6	11	0.09498	0.1989	0	0	0	0	0	0	1	-360	360;
	6	12	0.12291	0.25581	0	0	0	0	0	0	1	-360	360;
	6	13	0.06615	0.13027	0	0	0	0	0	0	1	-360	360;
	7	8	0	0.17615	0	0	0	0	0	0	1	-360	360;
	7	9	0	0.11001	0	0	0	0	0	0	1	-360	360;
	9	10	0.03181	0.0845	0	0	0	0	0	0	1	-360	360;
	9	14	0.12711	0.27038	0	0	0	0	0	0	1	-360	360;
	10	11	0.08205	0.19207	0	0	0	0	0	0	1	-360	360;
	12	13	0.22092	0.19988	0	0	0	0	0	0	1	-360	360;
	13	14	0.17093	0.34802	0	0	0	0	0	0	1	-360	360;
];
)";

// 33-bus radial distribution feeder (12.66 kV); series impedances converted
// to per-unit on the 10 MVA system base.
inline constexpr std::string_view ieee33 = R"(
function mpc = case33
mpc.version = '2';
mpc.baseMVA = 10;

%% bus data
mpc.bus = [
	1	3	0.000	0.000	0	0	1	1	0	12.66	1	1.1	0.9;
	2	1	0.100	0.060	0	0	1	1	0	12.66	1	1.1	0.9;
	3	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	4	1	0.120	0.080	0	0	1	1	0	12.66	1	1.1	0.9;
	5	1	0.060	0.030	0	0	1	1	0	12.66	1	1.1	0.9;
	6	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	7	1	0.200	0.100	0	0	1	1	0	12.66	1	1.1	0.9;
	8	1	0.200	0.100	0	0	1	1	0	12.66	1	1.1	0.9;
	9	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	10	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	11	1	0.045	0.030	0	0	1	1	0	12.66	1	1.1	0.9;
	12	1	0.060	0.035	0	0	1	1	0	12.66	1	1.1	0.9;
	13	1	0.060	0.035	0	0	1	1	0	12.66	1	1.1	0.9;
	14	1	0.120	0.080	0	0	1	1	0	12.66	1	1.1	0.9;
	15	1	0.060	0.010	0	0	1	1	0	12.66	1	1.1	0.9;
	16	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	17	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	18	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	19	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	20	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	21	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	22	1	0.090	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
	23	1	0.090	0.050	0	0	1	1	0	12.66	1	1.1	0.9;
	24	1	0.420	0.200	0	0	1	1	0	12.66	1	1.1	0.9;
	25	1	0.420	0.200	0	0	1	1	0	12.66	1	1.1	0.9;
	26	1	0.060	0.025	0	0	1	1	0	12.66	1	1.1	0.9;
	27	1	0.060	0.025	0	0	1	1	0	12.66	1	1.1	0.9;
	28	1	0.060	0.020	0	0	1	1	0	12.66	1	1.1	0.9;
	29	1	0.120	0.070	0	0	1	1	0	12.66	1	1.1	0.9;
	30	1	0.200	0.600	0	0	1	1	0	12.66	1	1.1	0.9;
	31	1	0.150	0.070	0	0	1	1	0	12.66	1	1.1	0.9;
	32	1	0.210	0.100	0	0	1	1	0	12.66	1	1.1	0.9;
	33	1	0.060	0.040	0	0	1	1	0	12.66	1	1.1	0.9;
];

%% generator data
mpc.gen = [
	1	0	0	10	-10	1	10	1	10	0;
];

%% branch data
mpc.branch = [
	1	2	0.00575259	0.00293245	0	0	0	0	0	0	1	-360	360;
	2	3	0.03075952	0.01566676	0	0	0	0	0	0	1	-360	360;
	3	4	0.02283567	0.01162997	0	0	0	0	0	0	1	-360	360;
	4	5	0.02377779	0.01211039	0	0	0	0	0	0	1	-360	360;
	5	6	0.05109948	0.04411152	0	0	0	0	0	0	1	-360	360;
	6	7	0.01167988	0.03860850	0	0	0	0	0	0	1	-360	360;
	7	8	0.04438605	0.01466848	0	0	0	0	0	0	1	-360	360;
	8	9	0.06426430	0.04617047	0	0	0	0	0	0	1	-360	360;
	9	10	0.06513780	0.04617047	0	0	0	0	0	0	1	-360	360;
	10	11	0.01226637	0.00405551	0	0	0	0	0	0	1	-360	360;
	11	12	0.02335976	0.00772420	0	0	0	0	0	0	1	-360	360;
	12	13	0.09159223	0.07206337	0	0	0	0	0	0	1	-360	360;
	13	14	0.03379179	0.04447963	0	0	0	0	0	0	1	-360	360;
	14	15	0.03687398	0.03281847	0	0	0	0	0	0	1	-360	360;
	15	16	0.04656354	0.03400393	0	0	0	0	0	0	1	-360	360;
	16	17	0.08042397	0.10737754	0	0	0	0	0	0	1	-360	360;
	17	18	0.04567133	0.03581331	0	0	0	0	0	0	1	-360	360;
	2	19	0.01023237	0.00976443	0	0	0	0	0	0	1	-360	360;
	19	20	0.09385084	0.08456683	0	0	0	0	0	0	1	-360	360;
	20	21	0.02554974	0.02984859	0	0	0	0	0	0	1	-360	360;
	21	22	0.04423006	0.05848052	0	0	0	0	0	0	1	-360	360;
	3	23	0.02815151	0.01923562	0	0	0	0	0	0	1	-360	360;
	23	24	0.05602849	0.04424254	0	0	0	0	0	0	1	-360	360;
	24	25	0.05590371	0.04374340	0	0	0	0	0	0	1	-360	360;
	6	26	0.01266568	0.00645139	0	0	0	0	0	0	1	-360	360;
	26	27	0.01773196	0.00902820	0	0	0	0	0	0	1	-360	360;
	27	28	0.06607369	0.05825590	0	0	0	0	0	0	1	-360	360;
	28	29	0.05017607	0.04371221	0	0	0	0	0	0	1	-360	360;
	29	30	0.03166421	0.01612847	0	0	0	0	0	0	1	-360	360;
	30	31	0.06079528	0.06008401	0	0	0	0	0	0	1	-360	360;
	31	32	0.01937288	0.02257986	0	0	0	0	0	0	1	-360	360;
	32	33	0.02127585	0.03308052	0	0	0	0	0	0	1	-360	360;
];
)";

/// Returns the bundled case text for a known id ("ieee9", "ieee14", "ieee33"),
/// or an empty view when the id is not bundled.
inline std::string_view bundled_case(std::string_view id) {
    if (id == "ieee9" || id == "case9") return ieee9;
    if (id == "ieee14" || id == "case14") return ieee14;
    if (id == "ieee33" || id == "case33") return ieee33;
    return {};
}

inline GridCase load_bundled(std::string_view id) {
    auto text = bundled_case(id);
    if (text.empty()) throw std::invalid_argument("unknown bundled case id: " + std::string(id));
    return parse_case(text, std::string(id));
}

}  // namespace gridse::cases
