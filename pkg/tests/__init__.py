# genmeter test suite
